#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "quench/models.hpp"
#include "quench/parallel.hpp"
#include "quench/rng.hpp"

namespace quench {

/// P_0 X_k. Linear models: the scalar a_k multiplying x_0. Chain models: the
/// table g(i, j) of values at (xi_{-1}, xi_0) = (i, j), zero off the support of
/// the pair law pi_i P(i, j).
struct Proj0Repr {
    std::size_t k = 0;
    std::optional<double> scalar;
    std::size_t states = 0;
    std::vector<cplx> table;
    double norm = 0.0;  ///< ||P_0 X_k||_2

    cplx at(std::size_t previous, std::size_t current) const { return table[previous * states + current]; }
};

Proj0Repr projection_p0(const ProcessModel& model, std::size_t k);

/// D_{r,0}(theta) = sum_{k<=r} P_0 X_k e^{ik theta}; same representation as Proj0Repr
/// (linear: x_0 f_{r+1}(theta), chain: complex table).
struct MartApprox {
    std::size_t r = 0;
    Frequency theta;
    std::optional<cplx> scalar;
    std::size_t states = 0;
    std::vector<cplx> table;
    double norm_sq = 0.0;  ///< E|D_{r,0}(theta)|^2
    /// Linear models: |f(theta) - f_{r+1}(theta)|, the distance to the r -> infinity limit.
    std::optional<double> tail_bound;

    cplx at(std::size_t previous, std::size_t current) const { return table[previous * states + current]; }
};

MartApprox d_r0(const ProcessModel& model, std::size_t r, Frequency theta);

/// M_{r,1}..M_{r,n} along a trajectory that carries its past.
std::vector<cplx> mart_path(const MartApprox& approx, const Trajectory& traj, std::size_t n);

struct ApproxError {
    double mean_sq = 0.0;  ///< (1/n) E_omega |S_n - E_0 S_n - M_{r,n}|^2
    double max_sq = 0.0;   ///< (1/n) E_omega max_{k<=n} |S_k - E_0 S_k - M_{r,k}|^2
    double std_error = 0.0;
    double max_std_error = 0.0;
};

ApproxError approx_error(const ProcessModel& model, const FrozenPast& past, Frequency theta, std::size_t r,
                         std::size_t n, std::size_t reps, const StreamFamily& streams, Exec exec = {});

/// Exact (1/n) E_omega |S_n - E_0 S_n - M_{r,n}|^2 for linear models:
/// (|x_0 f_{r+1}|^2 + sum_{m=1}^{n-1} |f_m - f_{r+1}|^2) / n over the sampled coefficients.
double approx_error_exact(const ProcessModel& model, const FrozenPast& past, Frequency theta, std::size_t r,
                          std::size_t n);

enum class Verdict { Converged, Inconclusive };
const char* verdict_name(Verdict v);

struct SeriesReport {
    std::vector<double> partial_sums;
    Verdict verdict = Verdict::Inconclusive;
    /// Bound or estimate of the omitted tail beyond the horizon.
    double tail = 0.0;
    bool divergence_hint = false;
};

struct HannanReport {
    SeriesReport hannan;  ///< sum_{n<=K} ||P_0 X_n||_2
    SeriesReport weak;    ///< sum_{n<=K} ||P_0 (X_{n+1} - X_n)||_2
};

struct MaxwellWoodroofeReport {
    SeriesReport series;       ///< sum_{k<=K} ||E_0 S_k||_2 / k^{3/2}
    std::vector<double> norms; ///< ||E_0 S_k(theta)||_2, k = 1..K
};

struct SeriesOptions {
    std::size_t window = 10;
    double tolerance = 1e-6;
    double divergence_cap = 1e6;
};

/// Verdict over a sequence of increments: converged when the last `window`
/// increments sum below the tolerance.
SeriesReport summarize_series(const std::vector<double>& increments, const SeriesOptions& opt = {});

HannanReport condition_hannan(const ProcessModel& model, std::size_t K, const SeriesOptions& opt = {});

/// ||E_0 S_n(theta)||_2 exactly (linear: orthogonal expansion with closed-form
/// geometric tail; chain: stationary law of xi_0).
double cond_dft_norm(const ProcessModel& model, std::size_t n, Frequency theta);

/// Verdict is based on the norms settling (increments of ||E_0 S_k|| over the
/// window below tolerance); the tail reported is 2 L / sqrt(K) with L the
/// largest norm seen.
MaxwellWoodroofeReport condition_mw(const ProcessModel& model, Frequency theta, std::size_t K,
                                    const SeriesOptions& opt = {});

/// sum_{k<=K} |E_0[X_k - X_{k-1}]|^2 / k at the frozen past.
SeriesReport condition_ratio(const ProcessModel& model, const FrozenPast& past, std::size_t K,
                             const SeriesOptions& opt = {});

}  // namespace quench
