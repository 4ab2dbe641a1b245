#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>

namespace quench {

/// Generates e^{i k theta} for k = 0, 1, 2, ... by one complex multiply per
/// step. Every 2^16 steps the phase is recomputed directly from k*theta so
/// rounding drift stays bounded. Multiples of pi/2 (to within a few ulps)
/// rotate by exact quarter turns.
class Rotor {
public:
    explicit Rotor(double theta) : theta_(theta), step_(std::polar(1.0, theta)) {
        const double q = theta / (std::numbers::pi / 2.0);
        const double r = std::nearbyint(q);
        if (std::abs(q - r) <= 1e-15 * std::max(1.0, std::abs(q))) {
            quarter_ = true;
            const auto turns = static_cast<long long>(r);
            step_ = quarter_turn(static_cast<int>(((turns % 4) + 4) % 4));
        }
    }

    std::complex<double> value() const noexcept { return w_; }

    void advance() {
        ++k_;
        if (quarter_) {
            w_ *= step_;  // entries stay in {0, +-1}
        } else if ((k_ & kResyncMask) == 0) {
            w_ = std::polar(1.0, std::fmod(static_cast<double>(k_) * theta_, 2.0 * std::numbers::pi));
        } else {
            w_ *= step_;
        }
    }

    static constexpr std::uint64_t kResyncMask = (1u << 16) - 1;

private:
    static std::complex<double> quarter_turn(int q) {
        switch (q) {
            case 1: return {0.0, 1.0};
            case 2: return {-1.0, 0.0};
            case 3: return {0.0, -1.0};
            default: return {1.0, 0.0};
        }
    }

    double theta_;
    std::complex<double> step_;
    bool quarter_ = false;
    std::complex<double> w_{1.0, 0.0};
    std::uint64_t k_ = 0;
};

/// Neumaier-compensated complex accumulator.
class CompensatedSum {
public:
    void add(std::complex<double> x) {
        add_part(re_, re_c_, x.real());
        add_part(im_, im_c_, x.imag());
    }
    std::complex<double> value() const noexcept { return {re_ + re_c_, im_ + im_c_}; }

private:
    static void add_part(double& sum, double& comp, double x) {
        const double t = sum + x;
        if (std::abs(sum) >= std::abs(x))
            comp += (sum - t) + x;
        else
            comp += (x - t) + sum;
        sum = t;
    }

    double re_ = 0.0, re_c_ = 0.0, im_ = 0.0, im_c_ = 0.0;
};

}  // namespace quench
