#include "quench/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "quench/errors.hpp"
#include "quench/rotor.hpp"

namespace quench {

namespace {

constexpr std::size_t kMaxDepth = 50'000'000;

void require_finite(double x, const char* what) {
    if (!std::isfinite(x)) throw ModelValidationError(std::string(what) + " must be finite");
}

}  // namespace

double draw_innovation(InnovationKind kind, Stream& stream) {
    switch (kind) {
        case InnovationKind::StandardNormal:
            return stream.normal();
        case InnovationKind::Rademacher:
            return stream.rademacher();
        case InnovationKind::UniformSymmetric:
            return std::sqrt(3.0) * (2.0 * stream.uniform() - 1.0);
    }
    return 0.0;
}

// ============================================================================
// LinearAdaptedModel
// ============================================================================

LinearAdaptedModel::LinearAdaptedModel(std::vector<double> prefix, std::optional<GeometricTail> tail,
                                       InnovationKind innovation, double truncation_eps)
    : prefix_(std::move(prefix)), tail_(tail), innovation_(innovation), truncation_eps_(truncation_eps) {
    for (double a : prefix_) require_finite(a, "coefficient");
    if (!(truncation_eps_ > 0.0) || !std::isfinite(truncation_eps_))
        throw ModelValidationError("truncation_eps must be a positive finite number");
    if (tail_) {
        require_finite(tail_->rho, "tail rho");
        require_finite(tail_->scale, "tail scale");
        if (!(std::abs(tail_->rho) < 1.0))
            throw ModelValidationError("tail rho must satisfy |rho| < 1 (square-summability)");
    }
    if (prefix_.empty() && !tail_) throw ModelValidationError("linear model needs at least one coefficient");

    const double budget = truncation_eps_ * truncation_eps_;
    const std::size_t p = prefix_.size();

    // Smallest t >= p whose tail mass is within budget, then walk down into the prefix.
    std::size_t t = p;
    if (tail_ && tail_->scale != 0.0 && tail_->rho != 0.0) {
        const double r2 = tail_->rho * tail_->rho;
        const double s2 = tail_->scale * tail_->scale;
        const double need = std::log(budget * (1.0 - r2) / s2) / std::log(r2);
        if (need > static_cast<double>(t)) t = static_cast<std::size_t>(std::ceil(need));
        while (t > p && tail_mass(t - 1) <= budget) --t;
        while (tail_mass(t) > budget) ++t;
    } else if (tail_ && tail_->rho == 0.0 && p == 0 && tail_->scale != 0.0) {
        t = 1;  // a_0 = scale, every later tail term vanishes
    }
    if (t > kMaxDepth) throw ResourceError("linear model truncation depth exceeds the memory budget");
    double mass = tail_mass(t);
    while (t > 1) {
        const double a = coefficient(t - 1);
        if (mass + a * a > budget) break;
        mass += a * a;
        --t;
    }
    depth_ = t == 0 ? 0 : t - 1;
    effective_.resize(depth_ + 1);
    for (std::size_t j = 0; j <= depth_; ++j) {
        effective_[j] = coefficient(j);
        if (effective_[j] != 0.0) support_.push_back(j);
    }
}

double LinearAdaptedModel::coefficient(std::size_t j) const {
    if (j < prefix_.size()) return prefix_[j];
    if (!tail_) return 0.0;
    return tail_->scale * std::pow(tail_->rho, static_cast<double>(j));
}

double LinearAdaptedModel::tail_mass(std::size_t from) const {
    double mass = 0.0;
    for (std::size_t j = from; j < prefix_.size(); ++j) mass += prefix_[j] * prefix_[j];
    if (tail_) {
        const std::size_t start = std::max(from, prefix_.size());
        const double r2 = tail_->rho * tail_->rho;
        mass += tail_->scale * tail_->scale * std::pow(r2, static_cast<double>(start)) / (1.0 - r2);
    }
    return mass;
}

cplx transfer_fn(const LinearAdaptedModel& model, Frequency theta, std::optional<std::size_t> r) {
    const auto& prefix = model.prefix();
    const std::size_t p = prefix.size();
    const std::size_t upto = r ? std::min(*r, p) : p;
    CompensatedSum sum;
    Rotor rot(theta.radians());
    for (std::size_t j = 0; j < upto; ++j) {
        sum.add(prefix[j] * rot.value());
        rot.advance();
    }
    cplx total = sum.value();
    const auto& tail = model.tail();
    if (tail && (!r || *r > p)) {
        const cplx z = std::polar(tail->rho, theta.radians());
        const cplx zp = std::pow(tail->rho, static_cast<double>(p)) *
                        std::polar(1.0, std::fmod(static_cast<double>(p) * theta.radians(), kTwoPi));
        cplx geometric = 1.0 / (1.0 - z);
        if (r) {
            const std::size_t len = *r - p;
            const cplx zl = std::pow(tail->rho, static_cast<double>(len)) *
                            std::polar(1.0, std::fmod(static_cast<double>(len) * theta.radians(), kTwoPi));
            geometric = (1.0 - zl) / (1.0 - z);
        }
        total += tail->scale * zp * geometric;
    }
    return total;
}

// ============================================================================
// FiniteChain
// ============================================================================

FiniteChain::FiniteChain(std::size_t m, std::vector<double> kernel, std::vector<double> stationary,
                         std::vector<cplx> observable)
    : m_(m), kernel_(std::move(kernel)), stationary_(std::move(stationary)), observable_(std::move(observable)) {
    if (m_ == 0) throw ModelValidationError("chain needs at least one state");
    if (kernel_.size() != m_ * m_) throw ModelValidationError("kernel must be an m x m matrix");
    if (stationary_.size() != m_) throw ModelValidationError("stationary vector must have m entries");
    if (observable_.size() != m_) throw ModelValidationError("observable must have m entries");

    cumulative_.resize(m_ * m_);
    for (std::size_t i = 0; i < m_; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < m_; ++j) {
            const double p = kernel_[i * m_ + j];
            require_finite(p, "kernel entry");
            if (p < 0.0) throw ModelValidationError("kernel entries must be nonnegative");
            row += p;
            cumulative_[i * m_ + j] = row;
        }
        if (std::abs(row - 1.0) > 1e-12)
            throw ModelValidationError("kernel row " + std::to_string(i) + " does not sum to 1 within 1e-12");
    }

    double total = 0.0;
    for (double s : stationary_) {
        require_finite(s, "stationary entry");
        if (s < 0.0) throw ModelValidationError("stationary entries must be nonnegative");
        total += s;
        stationary_cumulative_.push_back(total);
    }
    if (std::abs(total - 1.0) > 1e-10) throw ModelValidationError("stationary vector must sum to 1");
    for (std::size_t j = 0; j < m_; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < m_; ++i) s += stationary_[i] * kernel_[i * m_ + j];
        if (std::abs(s - stationary_[j]) > 1e-10)
            throw ModelValidationError("stationary vector is not invariant under the kernel (1e-10)");
    }
    for (const cplx& v : observable_) {
        require_finite(v.real(), "observable");
        require_finite(v.imag(), "observable");
    }

    mean_ = 0.0;
    for (std::size_t i = 0; i < m_; ++i) mean_ += stationary_[i] * observable_[i];

    const std::size_t horizon = std::min<std::size_t>(kPowerHorizon, std::max<std::size_t>(1, 10'000'000 / (m_ * m_)));
    raw_cache_ = powers_from(observable_, {}, horizon);
    std::vector<cplx> centered(observable_);
    for (auto& v : centered) v -= mean_;
    centered_cache_ = powers_from(centered, {}, horizon);
}

std::vector<cplx> FiniteChain::apply(std::span<const cplx> v) const {
    std::vector<cplx> out(m_);
    for (std::size_t i = 0; i < m_; ++i) {
        cplx s = 0.0;
        const double* row = kernel_.data() + i * m_;
        for (std::size_t j = 0; j < m_; ++j)
            if (row[j] != 0.0) s += row[j] * v[j];
        out[i] = s;
    }
    return out;
}

std::vector<std::vector<cplx>> FiniteChain::powers_from(std::span<const cplx> f,
                                                        const std::vector<std::vector<cplx>>& cache,
                                                        std::size_t k_max) const {
    std::vector<std::vector<cplx>> out;
    out.reserve(k_max + 1);
    for (std::size_t k = 0; k < cache.size() && k <= k_max; ++k) out.push_back(cache[k]);
    if (out.empty()) out.emplace_back(f.begin(), f.end());
    while (out.size() <= k_max) out.push_back(apply(out.back()));
    return out;
}

std::vector<std::vector<cplx>> FiniteChain::observable_powers(std::size_t k_max) const {
    return powers_from(observable_, raw_cache_, k_max);
}

std::vector<std::vector<cplx>> FiniteChain::centered_powers(std::size_t k_max) const {
    std::vector<cplx> centered(observable_);
    for (auto& v : centered) v -= mean_;
    return powers_from(centered, centered_cache_, k_max);
}

std::size_t FiniteChain::pick(std::span<const double> cumulative, Stream& stream) const {
    // Degenerate rows (one entry carrying all mass) consume no randomness.
    for (std::size_t j = 0; j < cumulative.size(); ++j) {
        const double before = j == 0 ? 0.0 : cumulative[j - 1];
        if (cumulative[j] - before == 1.0) return j;
        if (cumulative[j] - before != 0.0) break;
    }
    const double u = stream.uniform() * cumulative.back();
    std::size_t last_positive = 0;
    for (std::size_t j = 0; j < cumulative.size(); ++j) {
        const double before = j == 0 ? 0.0 : cumulative[j - 1];
        if (cumulative[j] > before) {
            last_positive = j;
            if (u < cumulative[j]) return j;
        }
    }
    return last_positive;
}

std::size_t FiniteChain::sample_stationary(Stream& stream) const { return pick(stationary_cumulative_, stream); }

std::size_t FiniteChain::next_state(std::size_t from, Stream& stream) const {
    return pick(std::span<const double>(cumulative_.data() + from * m_, m_), stream);
}

std::size_t FiniteChain::previous_state(std::size_t to, Stream& stream) const {
    std::vector<double> cumulative(m_);
    double total = 0.0;
    for (std::size_t i = 0; i < m_; ++i) {
        total += stationary_[i] * kernel_[i * m_ + to];
        cumulative[i] = total;
    }
    if (!(total > 0.0)) throw UsageError("state has zero stationary mass; no time-reversed predecessor");
    return pick(cumulative, stream);
}

// ============================================================================
// Markov functional and cycle models
// ============================================================================

namespace {

std::vector<cplx> to_complex(const std::vector<double>& v) { return {v.begin(), v.end()}; }

std::vector<double> cycle_kernel(std::size_t m) {
    std::vector<double> k(m * m, 0.0);
    for (std::size_t i = 0; i < m; ++i) k[i * m + (i + 1) % m] = 1.0;
    return k;
}

std::vector<cplx> cycle_observable(std::size_t m, std::optional<std::vector<cplx>> obs) {
    if (m < 2) throw ModelValidationError("cycle length must be at least 2");
    if (obs) return std::move(*obs);
    std::vector<cplx> out(m);
    for (std::size_t j = 0; j < m; ++j) out[j] = root_of_unity(j, m);
    return out;
}

}  // namespace

MarkovFunctionalModel::MarkovFunctionalModel(std::size_t m, std::vector<double> kernel,
                                             std::vector<double> stationary, std::vector<double> observable,
                                             bool centered)
    : kernel_(kernel),
      observable_(observable),
      centered_(centered),
      chain_(m, std::move(kernel), std::move(stationary), to_complex(observable)) {
    if (centered_ && std::abs(chain_.mean()) > 1e-10)
        throw ModelValidationError("observable flagged centered but its stationary mean is not 0 within 1e-10");
}

cplx root_of_unity(std::size_t j, std::size_t m) {
    j %= m;
    if ((4 * j) % m == 0) {
        switch ((4 * j / m) % 4) {
            case 0: return {1.0, 0.0};
            case 1: return {0.0, 1.0};
            case 2: return {-1.0, 0.0};
            default: return {0.0, -1.0};
        }
    }
    return std::polar(1.0, kTwoPi * static_cast<double>(j) / static_cast<double>(m));
}

CycleRotationModel::CycleRotationModel(std::size_t m, std::optional<std::vector<cplx>> observable)
    : chain_(m, cycle_kernel(m), std::vector<double>(m, 1.0 / static_cast<double>(m)),
             cycle_observable(m, std::move(observable))) {}

bool CycleRotationModel::is_eigen_frequency(Frequency theta) const {
    const double x = theta.radians() * static_cast<double>(states()) / std::numbers::pi;
    return std::abs(x - std::round(x)) <= 1e-9;
}

const FiniteChain* ProcessModel::chain() const noexcept {
    if (const auto* m = markov()) return &m->chain();
    if (const auto* c = cycle()) return &c->chain();
    return nullptr;
}

cplx ProcessModel::mean() const noexcept {
    const FiniteChain* c = chain();
    return c ? c->mean() : cplx{0.0, 0.0};
}

bool is_eigen_frequency(const ProcessModel& model, Frequency theta) {
    const auto* c = model.cycle();
    return c != nullptr && c->is_eigen_frequency(theta);
}

// ============================================================================
// Sampling
// ============================================================================

FrozenPast freeze_past(const ProcessModel& model, Stream& stream) {
    if (const auto* lin = model.linear()) {
        LinearPast past;
        past.back.resize(lin->depth() + 1);
        for (auto& x : past.back) x = draw_innovation(lin->innovation(), stream);
        return past;
    }
    const FiniteChain& chain = *model.chain();
    ChainPast past;
    past.state = chain.sample_stationary(stream);
    past.previous = chain.previous_state(past.state, stream);
    return past;
}

Trajectory sample_quenched_path(const ProcessModel& model, const FrozenPast& past, std::size_t n, Stream& stream) {
    if (n == 0) throw UsageError("trajectory length must be at least 1");
    Trajectory traj;
    traj.past = past;
    traj.seed_id = stream.key();
    traj.quenched = true;
    traj.values.resize(n);

    if (const auto* lin = model.linear()) {
        const LinearPast* lp = past.linear();
        if (!lp) throw UsageError("linear model needs a past of realized innovations");
        const std::size_t depth = lin->depth();
        if (lp->back.size() < depth + 1) throw UsageError("frozen past is shallower than the model's depth");
        traj.innovations.resize(n - 1);
        for (auto& x : traj.innovations) x = draw_innovation(lin->innovation(), stream);

        // z[depth + m] = x_m for m in [-depth, n-1]
        std::vector<double> z(depth + n);
        for (std::size_t j = 0; j <= depth; ++j) z[depth - j] = lp->back[j];
        for (std::size_t m = 1; m < n; ++m) z[depth + m] = traj.innovations[m - 1];
        const auto coeffs = lin->effective();
        const auto support = lin->support();
        for (std::size_t k = 0; k < n; ++k) {
            double x = 0.0;
            for (std::size_t j : support) x += coeffs[j] * z[depth + k - j];
            traj.values[k] = x;
        }
        return traj;
    }

    const ChainPast* cp = past.chain();
    if (!cp) throw UsageError("chain model needs a past holding the current state");
    const FiniteChain& chain = *model.chain();
    if (cp->state >= chain.states() || cp->previous >= chain.states())
        throw UsageError("frozen state is outside the chain's state space");
    traj.states.resize(n);
    std::size_t s = cp->state;
    const auto obs = chain.observable();
    for (std::size_t k = 0; k < n; ++k) {
        if (k > 0) s = chain.next_state(s, stream);
        traj.states[k] = s;
        traj.values[k] = obs[s];
    }
    return traj;
}

Trajectory sample_path(const ProcessModel& model, std::size_t n, Stream& stream) {
    if (n == 0) throw UsageError("trajectory length must be at least 1");
    const FrozenPast past = freeze_past(model, stream);
    Trajectory traj = sample_quenched_path(model, past, n, stream);
    traj.quenched = false;
    return traj;
}

// ============================================================================
// Exact quantities
// ============================================================================

namespace {

std::vector<cplx> chain_power(const FiniteChain& chain, std::size_t k, bool centered) {
    const std::size_t cached = std::min<std::size_t>(k, FiniteChain::kPowerHorizon);
    auto powers = centered ? chain.centered_powers(cached) : chain.observable_powers(cached);
    std::vector<cplx> v = std::move(powers.back());
    for (std::size_t step = cached; step < k; ++step) v = chain.apply(v);
    return v;
}

}  // namespace

cplx exact_autocov(const ProcessModel& model, long lag) {
    if (std::labs(lag) > kMaxAutocovLag) throw UsageError("autocovariance lag exceeds the configured maximum");
    const std::size_t h = static_cast<std::size_t>(std::labs(lag));
    if (const auto* lin = model.linear()) {
        const auto& prefix = lin->prefix();
        double s = 0.0;
        for (std::size_t j = 0; j < prefix.size(); ++j) s += prefix[j] * lin->coefficient(j + h);
        if (const auto& tail = lin->tail()) {
            const double r2 = tail->rho * tail->rho;
            s += tail->scale * tail->scale * std::pow(tail->rho, static_cast<double>(h)) *
                 std::pow(r2, static_cast<double>(prefix.size())) / (1.0 - r2);
        }
        return s;
    }
    const FiniteChain& chain = *model.chain();
    const auto g0 = chain_power(chain, 0, true);
    const auto gh = chain_power(chain, h, true);
    cplx s = 0.0;
    for (std::size_t i = 0; i < chain.states(); ++i) s += chain.stationary()[i] * g0[i] * std::conj(gh[i]);
    return lag >= 0 ? s : std::conj(s);
}

cplx cond_exp_value(const ProcessModel& model, const FrozenPast& past, std::size_t k) {
    if (const auto* lin = model.linear()) {
        const LinearPast* lp = past.linear();
        if (!lp) throw UsageError("linear model needs a past of realized innovations");
        double s = 0.0;
        const auto coeffs = lin->effective();
        for (std::size_t m : lin->support())
            if (m >= k) s += coeffs[m] * lp->x_minus(m - k);
        return s;
    }
    const ChainPast* cp = past.chain();
    if (!cp) throw UsageError("chain model needs a past holding the current state");
    return chain_power(*model.chain(), k, false)[cp->state];
}

cplx cond_exp_dft(const ProcessModel& model, const FrozenPast& past, std::size_t n, Frequency theta) {
    if (n == 0) throw UsageError("n must be at least 1");
    if (const auto* lin = model.linear()) {
        const LinearPast* lp = past.linear();
        if (!lp) throw UsageError("linear model needs a past of realized innovations");
        // sum_j x_{-j} (f_{j+n} - f_j)(theta) e^{-ij theta}, f_t the effective partial transfer sums
        const std::size_t depth = lin->depth();
        const auto coeffs = lin->effective();
        std::vector<cplx> partial(depth + 2);
        std::vector<cplx> rot(depth + 1);
        Rotor r(theta.radians());
        CompensatedSum acc;
        for (std::size_t j = 0; j <= depth; ++j) {
            rot[j] = r.value();
            partial[j] = acc.value();
            acc.add(coeffs[j] * rot[j]);
            r.advance();
        }
        partial[depth + 1] = acc.value();
        CompensatedSum out;
        for (std::size_t j = 0; j <= depth; ++j) {
            const double x = lp->x_minus(j);
            if (x == 0.0) continue;
            const cplx diff = partial[std::min(j + n, depth + 1)] - partial[j];
            out.add(x * diff * std::conj(rot[j]));
        }
        return out.value();
    }
    const ChainPast* cp = past.chain();
    if (!cp) throw UsageError("chain model needs a past holding the current state");
    const FiniteChain& chain = *model.chain();
    std::vector<cplx> v(chain.observable().begin(), chain.observable().end());
    Rotor r(theta.radians());
    CompensatedSum acc;
    for (std::size_t k = 0; k < n; ++k) {
        if (k > 0) v = chain.apply(v);
        acc.add(r.value() * v[cp->state]);
        r.advance();
    }
    return acc.value();
}

std::vector<cplx> cond_exp_dft_path(const ProcessModel& model, const FrozenPast& past, std::size_t n,
                                    Frequency theta) {
    if (n == 0) throw UsageError("n must be at least 1");
    std::vector<cplx> out(n);
    Rotor r(theta.radians());
    CompensatedSum acc;
    if (const auto* lin = model.linear()) {
        if (!past.linear()) throw UsageError("linear model needs a past of realized innovations");
        const std::size_t live = std::min(n, lin->depth() + 1);
        for (std::size_t k = 0; k < n; ++k) {
            if (k < live) acc.add(r.value() * cond_exp_value(model, past, k));
            out[k] = acc.value();
            r.advance();
        }
        return out;
    }
    const ChainPast* cp = past.chain();
    if (!cp) throw UsageError("chain model needs a past holding the current state");
    const FiniteChain& chain = *model.chain();
    std::vector<cplx> v(chain.observable().begin(), chain.observable().end());
    for (std::size_t k = 0; k < n; ++k) {
        if (k > 0) v = chain.apply(v);
        acc.add(r.value() * v[cp->state]);
        out[k] = acc.value();
        r.advance();
    }
    return out;
}

}  // namespace quench
