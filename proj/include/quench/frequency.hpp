#pragma once

#include <cmath>
#include <numbers>

namespace quench {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Angular frequency in radians, canonicalized to [0, 2π).
class Frequency {
public:
    constexpr Frequency() = default;
    explicit Frequency(double theta) : theta_(canonical(theta)) {}

    double radians() const noexcept { return theta_; }

    friend bool operator==(const Frequency&, const Frequency&) = default;

private:
    static double canonical(double theta) {
        double t = std::fmod(theta, kTwoPi);
        if (t < 0.0) t += kTwoPi;
        if (t >= kTwoPi) t = 0.0;
        return t;
    }

    double theta_ = 0.0;
};

}  // namespace quench
