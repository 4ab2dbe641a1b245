#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "quench/models.hpp"
#include "quench/parallel.hpp"
#include "quench/quenched_lab.hpp"
#include "quench/rng.hpp"

namespace quench {

/// One calibrated block of the sparse linear process whose non-centered
/// quenched DFTs fail to converge.
struct CounterexampleLevel {
    std::size_t k = 0;
    std::size_t n = 0;         ///< n_k
    double a = 0.0;            ///< coefficient placed at lag n_k
    double gamma = 0.0;        ///< bound on the lower-level contribution
    double threshold = 0.0;    ///< exceedance level for the rotated walk
    double target_probability = 0.0;
    double achieved_probability = 0.0;
};

/// Level 0 (n_0 = 1, a_0 = 1/2) only normalizes the first block; the process
/// coefficients are a_{n_k} = 2^{-k} n_{k-1}^{-1/2} for k = 1..K.
struct CounterexampleSpec {
    std::size_t n0 = 1;
    double a0 = 0.5;
    std::vector<CounterexampleLevel> levels;
    std::vector<double> theta_grid;
    double tau = 0.25;
    std::size_t n_max = 100000;
    std::size_t reps = 0;
    InnovationKind innovation = InnovationKind::Rademacher;

    std::size_t depth() const noexcept { return levels.empty() ? n0 : levels.back().n; }
    /// n_{k-1} for level k >= 1.
    std::size_t previous_n(std::size_t k) const;
    LinearAdaptedModel model() const;
};

/// 2^{-k} / sqrt(n_prev).
double coefficient_rule(std::size_t k, std::size_t n_prev);

/// 64 midpoints 2 pi (j + 1/2) / 64, plus 0 and pi when `include_axis`.
std::vector<double> default_theta_grid(bool include_axis = true, std::size_t points = 64);

/// Spec with given block lengths n_0 < n_1 < ... < n_K and coefficient rule;
/// gammas default to 0 (uncalibrated).
CounterexampleSpec hand_spec(const std::vector<std::size_t>& n, std::vector<double> theta_grid = {},
                             const std::vector<double>& gammas = {});

nlohmann::json spec_to_json(const CounterexampleSpec& spec);
CounterexampleSpec spec_from_json(const nlohmann::json& j);
void save_spec(const CounterexampleSpec& spec, const std::filesystem::path& path);
CounterexampleSpec load_spec(const std::filesystem::path& path);

/// zeta[m] = sum_{j<=m} e^{-ij theta} x_{-j} for back[j] = x_{-j}.
std::vector<cplx> zeta_sums(std::span<const double> back, Frequency theta);

/// E_0 S_n(theta) = sum_m a_m e^{im theta} (zeta[m] - zeta[m - n]), with zeta[l] = 0 for l < 0.
/// Requires zeta to cover every lag of `coeffs`.
cplx cond_exp_dft_zeta(std::span<const double> coeffs, std::span<const cplx> zeta, Frequency theta, std::size_t n);

/// (1 - 2^{-(k+2)})-quantile over past draws of sup_theta |sum_{1<=j<k} a_{n_j} e^{i n_j theta} zeta_{-n_j}(theta)|.
double calibrate_gamma(const CounterexampleSpec& so_far, std::size_t k, std::size_t reps,
                       const StreamFamily& streams, Exec exec = {});

struct BlockCalibration {
    std::size_t n = 0;
    double threshold = 0.0;
    double target = 0.0;
    std::vector<std::size_t> search_n;   ///< doubling-search trajectory
    std::vector<double> search_p;        ///< min-over-grid exceedance probability at each N
};

/// Smallest N = n_{k-1} + 2^i (capped at n_max) with
/// min_theta P(max_{n_{k-1} < n <= N} |W_n(theta)|/sqrt(n) >= tau (gamma_k + 2^{k+1}) / a_{n_k}) >= 1 - 2^{-(k+1)},
/// where W_n(theta) = sum_{l<n} e^{il theta} y_l is the rotated innovation walk
/// (equal in law to the zeta increment of length n).
BlockCalibration calibrate_block(const CounterexampleSpec& so_far, std::size_t k, double gamma_k,
                                 std::size_t reps, const StreamFamily& streams, Exec exec = {});

CounterexampleSpec build_spec(std::size_t K, double tau, std::vector<double> theta_grid, std::size_t reps,
                              std::size_t n_max, const StreamFamily& streams, Exec exec = {});

struct BlockInequality {
    double p_lhs = 0.0;       ///< P(max_block |E_0 S_n|/sqrt(n) >= 2^k)
    double p_main = 0.0;      ///< P(a_{n_k} max_block |zeta increment|/sqrt(n) >= gamma_k + 2^{k+1})
    double p_residual = 0.0;  ///< P(max_block |B_k(n)|/sqrt(n) >= 2^k), higher levels
    double p_prior = 0.0;     ///< P(|lower-level sum| > gamma_k)
    double se_lhs = 0.0, se_main = 0.0, se_residual = 0.0;
    double rhs = 0.0;         ///< p_main - p_residual - 2^{-(k+2)}
    bool holds = false;
};

BlockInequality verify_block_inequality(const CounterexampleSpec& spec, std::size_t k, Frequency theta,
                                        std::size_t reps, const StreamFamily& streams, Exec exec = {});

struct ProbabilityEstimate {
    double p = 0.0;
    double std_error = 0.0;
};

/// Per level, P(max_{n_{k-1} < n <= n_k} |E_0 S_n(theta)|/sqrt(n) >= tau 2^k) over fresh pasts.
std::vector<ProbabilityEstimate> divergence_probe(const CounterexampleSpec& spec, Frequency theta,
                                                  std::size_t reps, const StreamFamily& streams, Exec exec = {},
                                                  std::optional<double> tau = std::nullopt);

struct CenteringCheck {
    std::size_t n = 0;
    std::size_t past_index = 0;
    cplx shift;  ///< E_0 S_n / sqrt(n) at the chosen past
    double shift_floor = 0.0;
    CltRun uncentered;
    CltRun centered;
    bool demonstrated = false;  ///< uncentered fails and centered passes
};

/// Runs the quenched CLT test with and without conditional centering (same
/// seed) at a block length n (default n_K, the last calibrated block). The past
/// is the first frozen one whose shift |E_0 S_n|/sqrt(n) reaches tau 2^K.
/// Inside block k the level-k innovations have not entered S_n - E_0 S_n, so
/// the centered statistic falls short of sigma2(theta) by up to the level-k
/// share of the density.
CenteringCheck centering_necessity(const CounterexampleSpec& spec, Frequency theta, std::size_t reps,
                                   const StreamFamily& streams, Exec exec = {},
                                   std::optional<std::size_t> n = std::nullopt, std::size_t max_candidates = 200);

}  // namespace quench
