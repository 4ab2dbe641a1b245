#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "quench/frequency.hpp"
#include "quench/rng.hpp"

namespace quench {

using cplx = std::complex<double>;

enum class InnovationKind { StandardNormal, Rademacher, UniformSymmetric };

/// One innovation draw: mean 0, variance 1, symmetric about 0.
double draw_innovation(InnovationKind kind, Stream& stream);

/// Tail a_j = scale * rho^j for every j at or beyond the explicit prefix.
struct GeometricTail {
    double rho = 0.0;
    double scale = 1.0;
};

/// Adapted linear process X_k = sum_{j>=0} a_j x_{k-j} over i.i.d. unit-variance
/// innovations. The coefficient sequence is stored as an explicit prefix plus an
/// optional geometric tail; sampling uses the effective coefficients a_0..a_J,
/// where J is the smallest depth whose discarded tail mass is below eps^2.
class LinearAdaptedModel {
public:
    explicit LinearAdaptedModel(std::vector<double> prefix, std::optional<GeometricTail> tail = std::nullopt,
                                InnovationKind innovation = InnovationKind::StandardNormal,
                                double truncation_eps = 1e-8);

    /// Exact a_j (prefix or closed-form tail; zero past a finite support).
    double coefficient(std::size_t j) const;
    /// Sum_{j >= from} a_j^2, exact.
    double tail_mass(std::size_t from) const;

    std::size_t depth() const noexcept { return depth_; }
    std::span<const double> effective() const noexcept { return effective_; }
    /// Indices j <= depth() with a_j != 0, ascending.
    std::span<const std::size_t> support() const noexcept { return support_; }

    const std::vector<double>& prefix() const noexcept { return prefix_; }
    const std::optional<GeometricTail>& tail() const noexcept { return tail_; }
    InnovationKind innovation() const noexcept { return innovation_; }
    double truncation_eps() const noexcept { return truncation_eps_; }

private:
    std::vector<double> prefix_;
    std::optional<GeometricTail> tail_;
    InnovationKind innovation_;
    double truncation_eps_;
    std::size_t depth_ = 0;
    std::vector<double> effective_;
    std::vector<std::size_t> support_;
};

/// Finite-state stationary chain with a complex observable. Shared machinery
/// behind the Markov-functional and cycle-rotation families.
class FiniteChain {
public:
    FiniteChain(std::size_t m, std::vector<double> kernel, std::vector<double> stationary,
                std::vector<cplx> observable);

    std::size_t states() const noexcept { return m_; }
    double kernel(std::size_t i, std::size_t j) const { return kernel_[i * m_ + j]; }
    std::span<const double> stationary() const noexcept { return stationary_; }
    std::span<const cplx> observable() const noexcept { return observable_; }
    cplx mean() const noexcept { return mean_; }

    /// (P v)(i) = sum_j P(i,j) v(j).
    std::vector<cplx> apply(std::span<const cplx> v) const;
    /// P^k f for k = 0..k_max of the raw observable.
    std::vector<std::vector<cplx>> observable_powers(std::size_t k_max) const;
    /// Same for the centered observable f - E f.
    std::vector<std::vector<cplx>> centered_powers(std::size_t k_max) const;

    std::size_t sample_stationary(Stream& stream) const;
    std::size_t next_state(std::size_t from, Stream& stream) const;
    /// Draws xi_{-1} given xi_0 = to under the time-reversed chain.
    std::size_t previous_state(std::size_t to, Stream& stream) const;

    static constexpr std::size_t kPowerHorizon = 256;

private:
    std::size_t pick(std::span<const double> cumulative, Stream& stream) const;
    std::vector<std::vector<cplx>> powers_from(std::span<const cplx> f,
                                               const std::vector<std::vector<cplx>>& cache,
                                               std::size_t k_max) const;

    std::size_t m_;
    std::vector<double> kernel_;
    std::vector<double> cumulative_;
    std::vector<double> stationary_;
    std::vector<double> stationary_cumulative_;
    std::vector<cplx> observable_;
    cplx mean_;
    std::vector<std::vector<cplx>> raw_cache_;
    std::vector<std::vector<cplx>> centered_cache_;
};

/// Function of a stationary finite Markov chain, X_k = f(xi_k).
class MarkovFunctionalModel {
public:
    MarkovFunctionalModel(std::size_t m, std::vector<double> kernel, std::vector<double> stationary,
                          std::vector<double> observable, bool centered);

    std::size_t states() const noexcept { return chain_.states(); }
    const std::vector<double>& kernel_rows() const noexcept { return kernel_; }
    const std::vector<double>& observable() const noexcept { return observable_; }
    bool centered() const noexcept { return centered_; }
    const FiniteChain& chain() const noexcept { return chain_; }

private:
    std::vector<double> kernel_;
    std::vector<double> observable_;
    bool centered_;
    FiniteChain chain_;
};

/// Deterministic rotation on Z/m with uniform stationary law; its Koopman
/// operator has point spectrum exactly the m-th roots of unity.
class CycleRotationModel {
public:
    explicit CycleRotationModel(std::size_t m, std::optional<std::vector<cplx>> observable = std::nullopt);

    std::size_t states() const noexcept { return chain_.states(); }
    const FiniteChain& chain() const noexcept { return chain_; }
    std::span<const cplx> observable() const noexcept { return chain_.observable(); }

    /// True when e^{2i theta} is an m-th root of unity (tolerance 1e-9 on theta*m/pi).
    bool is_eigen_frequency(Frequency theta) const;

private:
    FiniteChain chain_;
};

/// exp(2 pi i j / m) with exact values on the quarter-turn points.
cplx root_of_unity(std::size_t j, std::size_t m);

class ProcessModel {
public:
    using Variant = std::variant<LinearAdaptedModel, MarkovFunctionalModel, CycleRotationModel>;

    ProcessModel(LinearAdaptedModel m) : v_(std::move(m)) {}
    ProcessModel(MarkovFunctionalModel m) : v_(std::move(m)) {}
    ProcessModel(CycleRotationModel m) : v_(std::move(m)) {}

    const Variant& variant() const noexcept { return v_; }
    const LinearAdaptedModel* linear() const noexcept { return std::get_if<LinearAdaptedModel>(&v_); }
    const MarkovFunctionalModel* markov() const noexcept { return std::get_if<MarkovFunctionalModel>(&v_); }
    const CycleRotationModel* cycle() const noexcept { return std::get_if<CycleRotationModel>(&v_); }
    /// The underlying finite chain for Markov and cycle models, nullptr for linear.
    const FiniteChain* chain() const noexcept;

    /// E X_0.
    cplx mean() const noexcept;

private:
    Variant v_;
};

/// Realized innovations x_0, x_{-1}, ..., x_{-J}; `back[j]` holds x_{-j}.
struct LinearPast {
    std::vector<double> back;
    double x_minus(std::size_t j) const { return j < back.size() ? back[j] : 0.0; }
    std::size_t depth() const noexcept { return back.empty() ? 0 : back.size() - 1; }
};

/// Realized chain state xi_0 together with the preceding state xi_{-1}, which
/// the martingale differences P_0 X_k depend on.
struct ChainPast {
    std::size_t state = 0;
    std::size_t previous = 0;
};

/// A frozen F_0: fixes the conditional law P_omega used by quenched sampling.
class FrozenPast {
public:
    FrozenPast(LinearPast p) : v_(std::move(p)) {}
    FrozenPast(ChainPast p) : v_(p) {}

    const LinearPast* linear() const noexcept { return std::get_if<LinearPast>(&v_); }
    const ChainPast* chain() const noexcept { return std::get_if<ChainPast>(&v_); }

private:
    std::variant<LinearPast, ChainPast> v_;
};

/// Sampled X_0..X_{n-1}. Linear trajectories also keep the fresh innovations
/// x_1..x_{n-1}; chain trajectories keep the visited states xi_0..xi_{n-1}.
struct Trajectory {
    std::vector<cplx> values;
    std::optional<FrozenPast> past;
    std::vector<double> innovations;
    std::vector<std::size_t> states;
    StreamKey seed_id;
    bool quenched = false;

    std::size_t size() const noexcept { return values.size(); }
};

/// Stationary path of length n (the past is drawn too and recorded).
Trajectory sample_path(const ProcessModel& model, std::size_t n, Stream& stream);

FrozenPast freeze_past(const ProcessModel& model, Stream& stream);

/// Path of length n under P_omega: the past is held fixed, only the future is random.
Trajectory sample_quenched_path(const ProcessModel& model, const FrozenPast& past, std::size_t n,
                                Stream& stream);

inline constexpr long kMaxAutocovLag = 1L << 24;

/// gamma(lag) = E[(X_0 - EX_0) conj(X_lag - EX_0)].
cplx exact_autocov(const ProcessModel& model, long lag);

/// E_0 X_k evaluated at the frozen past (k >= 0).
cplx cond_exp_value(const ProcessModel& model, const FrozenPast& past, std::size_t k);

/// E_0 S_n(theta) at the frozen past, exact for the sampled process.
cplx cond_exp_dft(const ProcessModel& model, const FrozenPast& past, std::size_t n, Frequency theta);

/// E_0 S_k(theta) for k = 1..n (entry k-1), in one pass.
std::vector<cplx> cond_exp_dft_path(const ProcessModel& model, const FrozenPast& past, std::size_t n,
                                    Frequency theta);

/// f_r(theta) = sum_{j<r} a_j e^{ij theta}; r = nullopt gives the full transfer
/// function (closed form on the geometric tail).
cplx transfer_fn(const LinearAdaptedModel& model, Frequency theta, std::optional<std::size_t> r);

/// True when e^{2i theta} lies in the model's point spectrum as far as it can be
/// detected (cycle models only; other families are treated as weakly mixing).
bool is_eigen_frequency(const ProcessModel& model, Frequency theta);

}  // namespace quench
