#include "quench/spectral.hpp"

#include <cmath>

#include "quench/errors.hpp"
#include "quench/stats.hpp"

namespace quench {

const char* method_name(SpectralMethod m) {
    switch (m) {
        case SpectralMethod::Exact: return "exact";
        case SpectralMethod::Variance: return "variance";
        case SpectralMethod::Cesaro: return "cesaro";
    }
    return "exact";
}

double subdominant_modulus(const FiniteChain& chain) {
    const std::size_t m = chain.states();
    const auto pi = chain.stationary();
    auto deflate = [&](std::vector<cplx>& v) {
        cplx mean = 0.0;
        for (std::size_t i = 0; i < m; ++i) mean += pi[i] * v[i];
        for (auto& x : v) x -= mean;
    };
    auto norm = [](const std::vector<cplx>& v) {
        double s = 0.0;
        for (const auto& x : v) s += std::norm(x);
        return std::sqrt(s);
    };
    std::vector<cplx> v(m);
    for (std::size_t i = 0; i < m; ++i) v[i] = 1.0 + std::sin(1.7 * static_cast<double>(i + 1));
    deflate(v);
    double nv = norm(v);
    if (nv == 0.0) return 0.0;
    for (auto& x : v) x /= nv;

    constexpr int kIterations = 3000;
    constexpr int kWindow = 200;
    double log_window = 0.0;
    for (int it = 0; it < kIterations; ++it) {
        v = chain.apply(v);
        deflate(v);
        nv = norm(v);
        if (nv < 1e-300) return 0.0;
        for (auto& x : v) x /= nv;
        if (it >= kIterations - kWindow) log_window += std::log(nv);
    }
    return std::exp(log_window / kWindow);
}

// ============================================================================
// DensityEvaluator
// ============================================================================

DensityEvaluator::DensityEvaluator(const ProcessModel& model) : linear_(model.linear()) {
    if (linear_) return;
    const FiniteChain& chain = *model.chain();
    const auto pi = chain.stationary();
    const std::size_t m = chain.states();
    auto g = chain.centered_powers(0).front();
    double gamma0 = 0.0;
    for (std::size_t i = 0; i < m; ++i) gamma0 += pi[i] * std::norm(g[i]);
    if (gamma0 == 0.0) {
        gamma_ = {0.0};
        return;
    }
    beta_ = subdominant_modulus(chain);
    if (beta_ >= 1.0 - 1e-9)
        throw PrecisionError("chain is not geometrically mixing (subdominant eigenvalue modulus ~ 1); "
                             "spectral tail bound unattainable");
    std::size_t horizon = 1;
    if (beta_ > 0.0) {
        const double k = std::ceil(std::log(kTailTolerance * (1.0 - beta_) / gamma0) / std::log(beta_));
        if (!(k < 1e7)) throw PrecisionError("spectral truncation horizon exceeds 1e7 lags");
        horizon = std::max<std::size_t>(1, static_cast<std::size_t>(std::max(0.0, k)));
    }
    gamma_.resize(horizon + 1);
    std::vector<cplx> v = g;
    for (std::size_t k = 0; k <= horizon; ++k) {
        if (k > 0) v = chain.apply(v);
        cplx s = 0.0;
        for (std::size_t i = 0; i < m; ++i) s += pi[i] * g[i] * std::conj(v[i]);
        gamma_[k] = s;
    }
}

double DensityEvaluator::operator()(Frequency theta) const {
    if (linear_) return std::norm(transfer_fn(*linear_, theta, std::nullopt));
    double s = gamma_[0].real();
    for (std::size_t k = 1; k < gamma_.size(); ++k)
        s += 2.0 * (gamma_[k] * std::polar(1.0, -std::fmod(static_cast<double>(k) * theta.radians(), kTwoPi))).real();
    return s;
}

SpectralEstimate density_exact(const ProcessModel& model, Frequency theta) {
    const DensityEvaluator density(model);
    return {theta, density(theta), SpectralMethod::Exact, 0, 0, 0.0};
}

SpectralEstimate density_variance_est(const ProcessModel& model, Frequency theta, std::size_t n,
                                      std::size_t reps, const StreamFamily& streams, Exec exec) {
    if (n == 0 || reps == 0) throw UsageError("n and reps must be at least 1");
    std::vector<double> values(reps);
    parallel_for(reps, exec, [&](std::size_t r) {
        Stream s = streams.at(r);
        const Trajectory traj = sample_path(model, n, s);
        values[r] = periodogram(traj, theta);
    });
    const MeanEstimate est = jackknife_mean(values);
    return {theta, est.mean, SpectralMethod::Variance, n, reps, est.std_error};
}

SpectralEstimate density_cesaro(const TwoSidedSequence& gamma, Frequency theta, std::size_t n) {
    const long half = static_cast<long>(gamma.half_width());
    const double tol = 1e-12 * std::max(1.0, std::abs(gamma[0]));
    for (long k = 0; k <= half; ++k)
        if (std::abs(gamma[-k] - std::conj(gamma[k])) > tol)
            throw UsageError("autocovariance input is not hermitian at lag " + std::to_string(k));
    std::vector<cplx> c(gamma.values().size());
    for (long k = -half; k <= half; ++k) c[static_cast<std::size_t>(k + half)] = gamma[-k];
    const cplx v = fejer_cesaro(TwoSidedSequence(gamma.half_width(), std::move(c)), theta, n);
    return {theta, v.real(), SpectralMethod::Cesaro, n, 0, 0.0};
}

TwoSidedSequence exact_autocov_window(const ProcessModel& model, std::size_t half_width) {
    const long half = static_cast<long>(half_width);
    std::vector<cplx> values(2 * half_width + 1);
    for (long k = 0; k <= half; ++k) {
        const cplx g = exact_autocov(model, k);
        values[static_cast<std::size_t>(half + k)] = g;
        values[static_cast<std::size_t>(half - k)] = std::conj(g);
    }
    return TwoSidedSequence(half_width, std::move(values));
}

double sigma2_quenched(const ProcessModel& model, Frequency theta) {
    if (model.cycle()) {
        if (is_eigen_frequency(model, theta))
            throw NotApplicableError("e^{2i theta} is in the point spectrum of the cycle rotation");
        return 0.0;
    }
    return density_exact(model, theta).estimate;
}

}  // namespace quench
