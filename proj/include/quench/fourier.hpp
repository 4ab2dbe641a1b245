#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "quench/frequency.hpp"
#include "quench/models.hpp"

namespace quench {

/// S_n(theta) together with the length and frequency it was computed at.
struct DftValue {
    cplx value;
    std::size_t n = 0;
    Frequency theta;
};

/// Piecewise-constant path t -> S_{floor(nt)}(theta)/sqrt(n) sampled on a grid.
struct PathSample {
    std::vector<double> times;
    std::vector<cplx> values;
};

/// S_n(theta) = sum_{k<n} X_k e^{ik theta}, incremental rotation with compensated summation.
DftValue dft(std::span<const cplx> values, Frequency theta);
inline DftValue dft(const Trajectory& traj, Frequency theta) { return dft(traj.values, theta); }

/// S_1..S_n (entry k-1 holds S_k).
std::vector<cplx> partial_dfts(std::span<const cplx> values, Frequency theta);

cplx fourier_average(std::span<const cplx> values, Frequency theta);
inline cplx fourier_average(const Trajectory& traj, Frequency theta) { return fourier_average(traj.values, theta); }

/// I_n(theta) = |S_n(theta)|^2 / n.
double periodogram(std::span<const cplx> values, Frequency theta);
inline double periodogram(const Trajectory& traj, Frequency theta) { return periodogram(traj.values, theta); }

PathSample path_values(std::span<const cplx> values, Frequency theta, std::span<const double> grid);
inline PathSample path_values(const Trajectory& traj, Frequency theta, std::span<const double> grid) {
    return path_values(traj.values, theta, grid);
}

/// Coefficients c_{-N}..c_N stored contiguously.
class TwoSidedSequence {
public:
    TwoSidedSequence(std::size_t half_width, std::vector<cplx> values);

    std::size_t half_width() const noexcept { return half_width_; }
    cplx operator[](long k) const { return values_[static_cast<std::size_t>(k + static_cast<long>(half_width_))]; }
    const std::vector<cplx>& values() const noexcept { return values_; }

private:
    std::size_t half_width_;
    std::vector<cplx> values_;
};

struct CesaroForms {
    cplx nested;      ///< (1/n) sum_{j<n} sum_{|k|<=j} c_k e^{ik theta}
    cplx triangular;  ///< sum_{|k|<n} (1 - |k|/n) c_k e^{ik theta}
};

/// Both forms of the order-n Fejer/Cesaro mean.
CesaroForms fejer_cesaro_forms(const TwoSidedSequence& c, Frequency theta, std::size_t n);

/// Order-n Cesaro mean; throws if the two evaluation forms disagree beyond 1e-12 (relative).
cplx fejer_cesaro(const TwoSidedSequence& c, Frequency theta, std::size_t n);

struct HuntYoungReport {
    double lhs = 0.0;
    double rhs = 0.0;
    double ratio = 0.0;
    std::size_t max_order = 0;
};

/// Maximal-function diagnostic: integral of sup_{n<=N} |sum_{k<n} a_k e^{ik theta}|^2
/// (periodic trapezoid over the grid, normalized Lebesgue measure) against sum |a_k|^2.
HuntYoungReport huntyoung_stat(std::span<const cplx> coeffs, std::span<const double> theta_grid,
                               std::size_t max_order);

}  // namespace quench
