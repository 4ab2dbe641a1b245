#include "quench/martingale.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "quench/errors.hpp"
#include "quench/fourier.hpp"
#include "quench/rotor.hpp"
#include "quench/stats.hpp"

namespace quench {

namespace {

// P^0 f, ..., P^k f of the centered observable.
std::vector<std::vector<cplx>> centered_sequence(const FiniteChain& chain, std::size_t k) {
    auto powers = chain.centered_powers(std::min(k, FiniteChain::kPowerHorizon));
    powers.reserve(k + 1);
    while (powers.size() < k + 1) powers.push_back(chain.apply(powers.back()));
    powers.resize(k + 1);
    return powers;
}

// g(i, j) = v(j) - w(i) on the support of the pair law.
std::vector<cplx> pair_table(const FiniteChain& chain, const std::vector<cplx>& v, const std::vector<cplx>& w) {
    const std::size_t m = chain.states();
    std::vector<cplx> table(m * m, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
            if (chain.kernel(i, j) > 0.0) table[i * m + j] = v[j] - w[i];
    return table;
}

double pair_norm_sq(const FiniteChain& chain, const std::vector<cplx>& table) {
    const std::size_t m = chain.states();
    const auto pi = chain.stationary();
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < m; ++j) row += chain.kernel(i, j) * std::norm(table[i * m + j]);
        s += pi[i] * row;
    }
    return s;
}

// Extrapolated tail of a series whose increments decay geometrically.
double geometric_tail_estimate(const std::vector<double>& inc) {
    if (inc.empty()) return std::numeric_limits<double>::infinity();
    const double last = inc.back();
    if (last == 0.0) return 0.0;
    if (inc.size() < 2 || inc[inc.size() - 2] <= 0.0) return std::numeric_limits<double>::infinity();
    const double q = last / inc[inc.size() - 2];
    if (q >= 1.0) return std::numeric_limits<double>::infinity();
    return last * q / (1.0 - q);
}

// Sum_{j > K} |a_j|, exact.
double linear_abs_tail(const LinearAdaptedModel& lin, std::size_t K) {
    const auto& prefix = lin.prefix();
    double s = 0.0;
    for (std::size_t j = K + 1; j < prefix.size(); ++j) s += std::abs(prefix[j]);
    if (const auto& tail = lin.tail()) {
        const std::size_t from = std::max(prefix.size(), K + 1);
        const double r = std::abs(tail->rho);
        s += std::abs(tail->scale) * std::pow(r, static_cast<double>(from)) / (1.0 - r);
    }
    return s;
}

}  // namespace

// ============================================================================
// Projections and martingale differences
// ============================================================================

Proj0Repr projection_p0(const ProcessModel& model, std::size_t k) {
    Proj0Repr out;
    out.k = k;
    if (const auto* lin = model.linear()) {
        out.scalar = lin->coefficient(k);
        out.norm = std::abs(*out.scalar);
        return out;
    }
    const FiniteChain& chain = *model.chain();
    const auto v = centered_sequence(chain, k + 1);
    out.states = chain.states();
    out.table = pair_table(chain, v[k], v[k + 1]);
    out.norm = std::sqrt(pair_norm_sq(chain, out.table));
    return out;
}

MartApprox d_r0(const ProcessModel& model, std::size_t r, Frequency theta) {
    MartApprox out;
    out.r = r;
    out.theta = theta;
    if (const auto* lin = model.linear()) {
        const cplx f_r = transfer_fn(*lin, theta, r + 1);
        out.scalar = f_r;
        out.norm_sq = std::norm(f_r);
        out.tail_bound = std::abs(transfer_fn(*lin, theta, std::nullopt) - f_r);
        return out;
    }
    const FiniteChain& chain = *model.chain();
    const std::size_t m = chain.states();
    // h = sum_{k<=r} e^{ik theta} P^k f, Ph = sum_{k<=r} e^{ik theta} P^{k+1} f
    std::vector<cplx> h(m, 0.0), ph(m, 0.0);
    std::vector<cplx> v = centered_sequence(chain, 0).front();
    Rotor rot(theta.radians());
    for (std::size_t k = 0; k <= r; ++k) {
        const cplx e = rot.value();
        for (std::size_t i = 0; i < m; ++i) h[i] += e * v[i];
        v = chain.apply(v);
        for (std::size_t i = 0; i < m; ++i) ph[i] += e * v[i];
        rot.advance();
    }
    out.states = m;
    out.table = pair_table(chain, h, ph);
    out.norm_sq = pair_norm_sq(chain, out.table);
    return out;
}

std::vector<cplx> mart_path(const MartApprox& approx, const Trajectory& traj, std::size_t n) {
    if (!traj.past) throw UsageError("martingale path needs a trajectory that records its past");
    if (n > traj.size()) throw UsageError("martingale path longer than the trajectory");
    std::vector<cplx> out(n);
    Rotor rot(approx.theta.radians());
    CompensatedSum acc;
    if (approx.scalar) {
        const LinearPast* lp = traj.past->linear();
        if (!lp || lp->back.empty()) throw UsageError("linear martingale path needs the innovation x_0");
        if (n > 0 && traj.innovations.size() + 1 < n) throw UsageError("trajectory lacks innovations x_1..x_{n-1}");
        for (std::size_t k = 0; k < n; ++k) {
            const double x = k == 0 ? lp->back[0] : traj.innovations[k - 1];
            acc.add(rot.value() * (x * *approx.scalar));
            out[k] = acc.value();
            rot.advance();
        }
        return out;
    }
    const ChainPast* cp = traj.past->chain();
    if (!cp) throw UsageError("chain martingale path needs the frozen states");
    if (traj.states.size() < n) throw UsageError("trajectory lacks the visited states");
    std::size_t prev = cp->previous;
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t cur = traj.states[k];
        acc.add(rot.value() * approx.at(prev, cur));
        out[k] = acc.value();
        prev = cur;
        rot.advance();
    }
    return out;
}

ApproxError approx_error(const ProcessModel& model, const FrozenPast& past, Frequency theta, std::size_t r,
                         std::size_t n, std::size_t reps, const StreamFamily& streams, Exec exec) {
    if (n == 0 || reps == 0) throw UsageError("n and reps must be at least 1");
    const MartApprox approx = d_r0(model, r, theta);
    const std::vector<cplx> centering = cond_exp_dft_path(model, past, n, theta);
    std::vector<double> last(reps), maxima(reps);
    const double inv_n = 1.0 / static_cast<double>(n);
    parallel_for(reps, exec, [&](std::size_t i) {
        Stream s = streams.at(i);
        const Trajectory traj = sample_quenched_path(model, past, n, s);
        const auto sums = partial_dfts(traj.values, theta);
        const auto mart = mart_path(approx, traj, n);
        double mx = 0.0;
        for (std::size_t k = 0; k < n; ++k) mx = std::max(mx, std::norm(sums[k] - centering[k] - mart[k]));
        last[i] = std::norm(sums[n - 1] - centering[n - 1] - mart[n - 1]) * inv_n;
        maxima[i] = mx * inv_n;
    });
    const MeanEstimate a = jackknife_mean(last);
    const MeanEstimate b = jackknife_mean(maxima);
    return {a.mean, b.mean, a.std_error, b.std_error};
}

double approx_error_exact(const ProcessModel& model, const FrozenPast& past, Frequency theta, std::size_t r,
                          std::size_t n) {
    const auto* lin = model.linear();
    if (!lin) throw UsageError("closed-form approximation error is available for linear models only");
    const LinearPast* lp = past.linear();
    if (!lp || lp->back.empty()) throw UsageError("linear model needs a past of realized innovations");
    if (n == 0) throw UsageError("n must be at least 1");
    const cplx d = *d_r0(model, r, theta).scalar;
    const auto coeffs = lin->effective();
    double s = std::norm(lp->back[0] * d);
    Rotor rot(theta.radians());
    CompensatedSum f;  // f_m
    for (std::size_t m = 1; m < n; ++m) {
        if (m - 1 < coeffs.size()) f.add(coeffs[m - 1] * rot.value());
        rot.advance();
        s += std::norm(f.value() - d);
    }
    return s / static_cast<double>(n);
}

// ============================================================================
// Condition checkers
// ============================================================================

const char* verdict_name(Verdict v) { return v == Verdict::Converged ? "converged" : "inconclusive"; }

SeriesReport summarize_series(const std::vector<double>& increments, const SeriesOptions& opt) {
    SeriesReport rep;
    rep.partial_sums.resize(increments.size());
    double s = 0.0;
    for (std::size_t i = 0; i < increments.size(); ++i) rep.partial_sums[i] = (s += increments[i]);
    if (increments.size() > opt.window) {
        double recent = 0.0;
        bool nondecreasing = true;
        for (std::size_t i = increments.size() - opt.window; i < increments.size(); ++i) {
            recent += increments[i];
            if (increments[i] < increments[i - 1]) nondecreasing = false;
        }
        if (recent < opt.tolerance) rep.verdict = Verdict::Converged;
        rep.divergence_hint = s > opt.divergence_cap && nondecreasing;
    }
    rep.tail = geometric_tail_estimate(increments);
    return rep;
}

HannanReport condition_hannan(const ProcessModel& model, std::size_t K, const SeriesOptions& opt) {
    if (K == 0) throw UsageError("horizon K must be at least 1");
    std::vector<double> strong(K + 1), weak(K + 1);
    HannanReport rep;
    if (const auto* lin = model.linear()) {
        for (std::size_t n = 0; n <= K; ++n) {
            strong[n] = std::abs(lin->coefficient(n));
            weak[n] = std::abs(lin->coefficient(n + 1) - lin->coefficient(n));
        }
        rep.hannan = summarize_series(strong, opt);
        rep.weak = summarize_series(weak, opt);
        rep.hannan.tail = linear_abs_tail(*lin, K);
        rep.weak.tail = 2.0 * linear_abs_tail(*lin, K);
        return rep;
    }
    const FiniteChain& chain = *model.chain();
    const auto v = centered_sequence(chain, K + 2);
    std::vector<cplx> g_next = pair_table(chain, v[0], v[1]);
    for (std::size_t n = 0; n <= K; ++n) {
        const std::vector<cplx> g = std::move(g_next);
        g_next = pair_table(chain, v[n + 1], v[n + 2]);
        strong[n] = std::sqrt(pair_norm_sq(chain, g));
        std::vector<cplx> diff(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) diff[i] = g_next[i] - g[i];
        weak[n] = std::sqrt(pair_norm_sq(chain, diff));
    }
    rep.hannan = summarize_series(strong, opt);
    rep.weak = summarize_series(weak, opt);
    return rep;
}

double cond_dft_norm(const ProcessModel& model, std::size_t n, Frequency theta) {
    if (const auto* lin = model.linear()) {
        // ||E_0 S_n||^2 = sum_{j>=0} |f_{j+n} - f_j|^2 (unit-variance innovations)
        const auto& prefix = lin->prefix();
        const std::size_t P = prefix.size();
        const double t = theta.radians();
        std::vector<cplx> f(P + 1);
        {
            Rotor rot(t);
            CompensatedSum acc;
            for (std::size_t j = 0; j < P; ++j) {
                f[j] = acc.value();
                acc.add(prefix[j] * rot.value());
                rot.advance();
            }
            f[P] = acc.value();
        }
        const auto& tail = lin->tail();
        const cplx z = tail ? std::polar(tail->rho, t) : cplx(0.0);
        auto zpow = [&](std::size_t m) {
            return std::pow(tail->rho, static_cast<double>(m)) *
                   std::polar(1.0, std::fmod(static_cast<double>(m) * t, kTwoPi));
        };
        auto f_at = [&](std::size_t m) -> cplx {
            if (m <= P) return f[m];
            if (!tail) return f[P];
            return f[P] + tail->scale * zpow(P) * (1.0 - zpow(m - P)) / (1.0 - z);
        };
        double s = 0.0;
        for (std::size_t j = 0; j < P; ++j) s += std::norm(f_at(j + n) - f[j]);
        if (tail) {
            const double r2 = tail->rho * tail->rho;
            s += tail->scale * tail->scale * std::norm(1.0 - zpow(n)) / std::norm(1.0 - z) *
                 std::pow(r2, static_cast<double>(P)) / (1.0 - r2);
        }
        return std::sqrt(s);
    }
    const FiniteChain& chain = *model.chain();
    const auto pi = chain.stationary();
    const std::size_t m = chain.states();
    std::vector<cplx> v = centered_sequence(chain, 0).front();
    std::vector<cplx> h(m, 0.0);
    Rotor rot(theta.radians());
    for (std::size_t k = 0; k < n; ++k) {
        if (k > 0) v = chain.apply(v);
        for (std::size_t i = 0; i < m; ++i) h[i] += rot.value() * v[i];
        rot.advance();
    }
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += pi[i] * std::norm(h[i]);
    return std::sqrt(s);
}

MaxwellWoodroofeReport condition_mw(const ProcessModel& model, Frequency theta, std::size_t K,
                                    const SeriesOptions& opt) {
    if (K == 0) throw UsageError("horizon K must be at least 1");
    MaxwellWoodroofeReport rep;
    rep.norms.resize(K);
    if (model.linear()) {
        for (std::size_t k = 1; k <= K; ++k) rep.norms[k - 1] = cond_dft_norm(model, k, theta);
    } else {
        const FiniteChain& chain = *model.chain();
        const auto pi = chain.stationary();
        const std::size_t m = chain.states();
        std::vector<cplx> v = centered_sequence(chain, 0).front();
        std::vector<cplx> h(m, 0.0);
        Rotor rot(theta.radians());
        for (std::size_t k = 0; k < K; ++k) {
            if (k > 0) v = chain.apply(v);
            for (std::size_t i = 0; i < m; ++i) h[i] += rot.value() * v[i];
            rot.advance();
            double s = 0.0;
            for (std::size_t i = 0; i < m; ++i) s += pi[i] * std::norm(h[i]);
            rep.norms[k] = std::sqrt(s);
        }
    }
    std::vector<double> inc(K);
    for (std::size_t k = 1; k <= K; ++k) inc[k - 1] = rep.norms[k - 1] / std::pow(static_cast<double>(k), 1.5);
    rep.series = summarize_series(inc, opt);
    rep.series.verdict = Verdict::Inconclusive;
    if (K > opt.window) {
        double drift = 0.0;
        for (std::size_t k = K - opt.window; k < K; ++k) drift += std::abs(rep.norms[k] - rep.norms[k - 1]);
        if (drift < opt.tolerance) rep.series.verdict = Verdict::Converged;
    }
    const double L = *std::max_element(rep.norms.begin(), rep.norms.end());
    rep.series.tail = 2.0 * L / std::sqrt(static_cast<double>(K));
    return rep;
}

SeriesReport condition_ratio(const ProcessModel& model, const FrozenPast& past, std::size_t K,
                             const SeriesOptions& opt) {
    if (K == 0) throw UsageError("horizon K must be at least 1");
    std::vector<cplx> cond(K + 1);
    if (model.linear()) {
        for (std::size_t k = 0; k <= K; ++k) cond[k] = cond_exp_value(model, past, k);
    } else {
        const ChainPast* cp = past.chain();
        if (!cp) throw UsageError("chain model needs a past holding the current state");
        const FiniteChain& chain = *model.chain();
        std::vector<cplx> v(chain.observable().begin(), chain.observable().end());
        for (std::size_t k = 0; k <= K; ++k) {
            if (k > 0) v = chain.apply(v);
            cond[k] = v[cp->state];
        }
    }
    std::vector<double> inc(K);
    for (std::size_t k = 1; k <= K; ++k) inc[k - 1] = std::norm(cond[k] - cond[k - 1]) / static_cast<double>(k);
    return summarize_series(inc, opt);
}

}  // namespace quench
