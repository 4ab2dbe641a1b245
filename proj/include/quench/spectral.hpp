#pragma once

#include <cstddef>
#include <vector>

#include "quench/fourier.hpp"
#include "quench/models.hpp"
#include "quench/parallel.hpp"
#include "quench/rng.hpp"

namespace quench {

enum class SpectralMethod { Exact, Variance, Cesaro };

const char* method_name(SpectralMethod m);

/// Spectral density value w.r.t. normalized Lebesgue measure on [0, 2pi).
struct SpectralEstimate {
    Frequency theta;
    double estimate = 0.0;
    SpectralMethod method = SpectralMethod::Exact;
    std::size_t n = 0;
    std::size_t reps = 0;
    double std_error = 0.0;
};

/// Modulus of the subdominant eigenvalue of the kernel (spectral radius of
/// P - 1 pi^T), estimated by normalized power iteration.
double subdominant_modulus(const FiniteChain& chain);

/// Evaluates the exact density repeatedly without recomputing autocovariances.
/// Linear models use |f(theta)|^2; chain models sum gamma(k) e^{-ik theta} over
/// |k| <= K with K from the geometric decay bound (tail below 1e-8).
class DensityEvaluator {
public:
    explicit DensityEvaluator(const ProcessModel& model);

    double operator()(Frequency theta) const;
    /// Truncation horizon K (0 for linear models).
    std::size_t horizon() const noexcept { return gamma_.empty() ? 0 : gamma_.size() - 1; }
    double subdominant() const noexcept { return beta_; }

    static constexpr double kTailTolerance = 1e-8;

private:
    const LinearAdaptedModel* linear_ = nullptr;
    std::vector<cplx> gamma_;
    double beta_ = 0.0;
};

SpectralEstimate density_exact(const ProcessModel& model, Frequency theta);

/// (1/(n reps)) sum over independent stationary replicates of |S_n(theta)|^2.
SpectralEstimate density_variance_est(const ProcessModel& model, Frequency theta, std::size_t n,
                                      std::size_t reps, const StreamFamily& streams, Exec exec = {});

/// Order-n Cesaro mean of sum_j gamma(-j) e^{ij theta}; equals (1/n) E|S_n(theta)|^2
/// when gamma is the exact autocovariance.
SpectralEstimate density_cesaro(const TwoSidedSequence& gamma, Frequency theta, std::size_t n);

/// gamma(-N..N) from exact_autocov.
TwoSidedSequence exact_autocov_window(const ProcessModel& model, std::size_t half_width);

/// Limit variance of the centered quenched DFT: the density of the regular part.
/// Cycle models have no regular part (0) and reject eigen-frequencies.
double sigma2_quenched(const ProcessModel& model, Frequency theta);

}  // namespace quench
