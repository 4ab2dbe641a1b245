#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "quench/models.hpp"
#include "quench/parallel.hpp"
#include "quench/rng.hpp"
#include "quench/stats.hpp"

namespace quench {

enum class SamplingMode { Annealed, Quenched };
enum class Centering { None, Conditional };

const char* mode_name(SamplingMode m);
const char* centering_name(Centering c);

struct SampleMeta {
    std::string model_id;
    std::optional<Frequency> theta;  ///< empty for averaged-frequency runs
    std::size_t n = 0;
    std::size_t reps = 0;
    SamplingMode mode = SamplingMode::Annealed;
    Centering centering = Centering::None;
    std::uint64_t seed = 0;
};

/// Replicates of Z_n(theta) = S_n/sqrt(n) or Y_n(theta) = (S_n - E_0 S_n)/sqrt(n).
struct EmpiricalSample {
    std::vector<cplx> values;
    SampleMeta meta;
};

struct CltRun {
    EmpiricalSample sample;
    TestReport report;
    double sigma2 = 0.0;
};

struct LabOptions {
    Exec exec;
    std::optional<Thresholds> thresholds;  ///< defaults from reps when empty
    std::string model_id;
};

/// Quenched mode holds `past` fixed for every replicate; annealed mode draws a
/// fresh stationary past per replicate (and centers at that past when asked).
CltRun run_clt(const ProcessModel& model, Frequency theta, std::size_t n, std::size_t reps, SamplingMode mode,
               Centering centering, const std::optional<FrozenPast>& past, const StreamFamily& streams,
               const LabOptions& opt = {});

struct LimitShift {
    std::vector<std::size_t> n;
    std::vector<cplx> values;  ///< E_0 Z_n(theta) at the frozen past
    bool converged = false;
    std::optional<cplx> limit;
};

/// Converged when the last three values agree within `tolerance`.
LimitShift limit_shift(const ProcessModel& model, const FrozenPast& past, Frequency theta,
                       const std::vector<std::size_t>& n_list, double tolerance = 1e-3);

/// Finite-dimensional test of the centered path W_n(t) at the given times:
/// the increments of W_n over consecutive times, each standardized by
/// sqrt(sigma2 dt / 2), are tested against standard normal component-wise,
/// and every pair among the 2|times| components for correlation.
/// Per-increment reports are in `report.components`; the top-level ks/corr
/// fields hold the worst values.
struct InvarianceRun {
    TestReport report;
    std::vector<std::size_t> lattice;             ///< floor(n t_i), with a leading 0
    std::vector<std::vector<cplx>> increments;    ///< [increment][replicate], unstandardized
    double sigma2 = 0.0;
};

InvarianceRun run_invariance(const ProcessModel& model, const FrozenPast& past, Frequency theta, std::size_t n,
                          std::size_t reps, const std::vector<double>& times, const StreamFamily& streams,
                          const LabOptions& opt = {});

struct AveragedRun {
    TestReport report;
    std::vector<double> thetas;
    std::vector<double> sigma2;
    std::vector<std::size_t> kept;   ///< replicate indices that were not dropped
    std::vector<cplx> standardized;  ///< kept replicates only, in `kept` order
    std::size_t dropped = 0;
};

/// Each replicate draws theta uniformly, computes W_n(theta, 1) and divides by
/// sigma(theta)/sqrt(2); replicates with sigma2 <= 1e-8 are dropped.
AveragedRun averaged_frequency_run(const ProcessModel& model, const FrozenPast& past, std::size_t n,
                                   std::size_t reps, const StreamFamily& streams, const LabOptions& opt = {});

inline constexpr double kDegenerateSigma2 = 1e-12;
inline constexpr double kAveragedDropFloor = 1e-8;

}  // namespace quench
