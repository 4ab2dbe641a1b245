#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <vector>

#include "oracles.hpp"
#include "quench/errors.hpp"
#include "quench/fourier.hpp"
#include "quench/martingale.hpp"
#include "quench/spectral.hpp"
#include "quench/stats.hpp"

using namespace quench;
using oracle::pi;

namespace {

ProcessModel geometric(double rho) { return LinearAdaptedModel({}, GeometricTail{rho, 1.0}); }

const std::vector<double> kSkew = {0.1, 0.7, 0.2, 0.2, 0.1, 0.7, 0.6, 0.2, 0.2};

std::vector<double> stationary_of(const std::vector<double>& P, std::size_t m) {
    std::vector<double> p(m, 1.0 / m);
    for (int it = 0; it < 5000; ++it) {
        std::vector<double> next(m, 0.0);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) next[j] += p[i] * P[i * m + j];
        p = next;
    }
    return p;
}

ProcessModel skew_chain() { return MarkovFunctionalModel(3, kSkew, stationary_of(kSkew, 3), {1.0, 0.5, -2.0}, false); }

std::vector<double> centered_obs() {
    const auto st = stationary_of(kSkew, 3);
    std::vector<double> f = {1.0, 0.5, -2.0};
    double mean = 0.0;
    for (std::size_t i = 0; i < 3; ++i) mean += st[i] * f[i];
    for (auto& v : f) v -= mean;
    return f;
}

ProcessModel identity_chain() {
    return MarkovFunctionalModel(2, {1.0, 0.0, 0.0, 1.0}, {0.5, 0.5}, {1.0, -1.0}, true);
}

// f_m(theta) for dense coefficients, per-term exponentials.
cplx fm(const std::vector<double>& a, double th, std::size_t m) { return oracle::partial_transfer(a, th, m); }

}  // namespace

// ============================================================================
// Projections
// ============================================================================

TEST(Projection, LinearExamples) {
    const LinearAdaptedModel m({1.0, 0.5});
    const auto p = projection_p0(m, 1);
    ASSERT_TRUE(p.scalar);
    EXPECT_EQ(*p.scalar, 0.5);
    EXPECT_EQ(p.norm, 0.5);
    EXPECT_EQ(*projection_p0(m, 5).scalar, 0.0);
    EXPECT_EQ(projection_p0(m, 5).norm, 0.0);
    EXPECT_NEAR(*projection_p0(geometric(-0.5), 3).scalar, -0.125, 1e-16);
}

TEST(Projection, IdentityKernelIsZero) {
    for (std::size_t k : {0u, 1u, 9u}) {
        const auto p = projection_p0(identity_chain(), k);
        for (const cplx& g : p.table) EXPECT_EQ(std::abs(g), 0.0);
        EXPECT_EQ(p.norm, 0.0);
    }
}

TEST(Projection, MarkovTableMatchesKernelPowers) {
    const auto f = centered_obs();
    const auto st = stationary_of(kSkew, 3);
    for (std::size_t k : {0u, 1u, 4u}) {
        const auto p = projection_p0(skew_chain(), k);
        const auto pk = oracle::kernel_power_apply(kSkew, 3, f, k);
        const auto pk1 = oracle::kernel_power_apply(kSkew, 3, f, k + 1);
        double norm_sq = 0.0;
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j) {
                const double want = pk[j] - pk1[i];
                EXPECT_NEAR(p.at(i, j).real(), want, 1e-12);
                norm_sq += st[i] * kSkew[i * 3 + j] * want * want;
            }
        EXPECT_NEAR(p.norm, std::sqrt(norm_sq), 1e-12);
    }
}

TEST(Projection, MarkovIsMartingaleDifference) {
    for (std::size_t k : {0u, 1u, 2u, 7u}) {
        const auto p = projection_p0(skew_chain(), k);
        for (std::size_t i = 0; i < 3; ++i) {
            cplx s = 0.0;
            for (std::size_t j = 0; j < 3; ++j) s += kSkew[i * 3 + j] * p.at(i, j);
            EXPECT_NEAR(std::abs(s), 0.0, 1e-10);
        }
    }
}

TEST(Projection, ZeroOffPairLawSupport) {
    const MarkovFunctionalModel m(2, {0.5, 0.5, 1.0, 0.0}, {2.0 / 3, 1.0 / 3}, {1.0, -2.0}, true);
    EXPECT_EQ(projection_p0(m, 0).at(1, 1), cplx(0.0));
}

// ============================================================================
// D_{r,0} and M_{r,n}
// ============================================================================

TEST(DR0, LinearExamples) {
    const LinearAdaptedModel m({1.0, 0.5});
    EXPECT_NEAR(std::abs(*d_r0(m, 0, Frequency(1.0)).scalar - 1.0), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(*d_r0(m, 1, Frequency(pi)).scalar - 0.5), 0.0, 1e-15);
    const auto g = d_r0(geometric(0.5), 60, Frequency(pi / 2));
    EXPECT_NEAR(std::abs(*g.scalar - cplx(0.8, 0.4)), 0.0, 1e-15);
    ASSERT_TRUE(g.tail_bound);
    EXPECT_LE(*g.tail_bound, 1e-15);
    EXPECT_NEAR(*d_r0(geometric(0.5), 3, Frequency(pi / 2)).tail_bound,
                std::abs(cplx(0.8, 0.4) - fm(oracle::geometric(0.5, 4), pi / 2, 4)), 1e-15);
}

TEST(DR0, MarkovTableSumsProjections) {
    const double th = 1.1;
    const auto d = d_r0(skew_chain(), 5, Frequency(th));
    std::vector<cplx> want(9, 0.0);
    for (std::size_t k = 0; k <= 5; ++k) {
        const auto p = projection_p0(skew_chain(), k);
        for (std::size_t c = 0; c < 9; ++c) want[c] += p.table[c] * oracle::expi(k * th);
    }
    for (std::size_t c = 0; c < 9; ++c) EXPECT_NEAR(std::abs(d.table[c] - want[c]), 0.0, 1e-12);
}

TEST(DR0, NormRecoversDensity) {
    EXPECT_NEAR(d_r0(geometric(0.5), 60, Frequency(pi / 2)).norm_sq, density_exact(geometric(0.5), Frequency(pi / 2)).estimate, 1e-6);
    const auto chain = skew_chain();
    EXPECT_NEAR(d_r0(chain, 80, Frequency(0.7)).norm_sq, density_exact(chain, Frequency(0.7)).estimate, 1e-6);
}

TEST(MartPath, RandomWalk) {
    const LinearAdaptedModel m({1.0});
    Stream s(StreamKey{1, 0, 0});
    const auto t = sample_path(m, 50, s);
    const auto path = mart_path(d_r0(m, 0, Frequency(0.0)), t, 50);
    double sum = t.past->linear()->back[0];
    EXPECT_NEAR(path[0].real(), sum, 1e-15);
    for (std::size_t k = 1; k < 50; ++k) {
        sum += t.innovations[k - 1];
        EXPECT_NEAR(path[k].real(), sum, 1e-12);
        EXPECT_EQ(path[k].imag(), 0.0);
    }
}

TEST(MartPath, TwoTermExample) {
    const LinearAdaptedModel m({1.0, 0.5});
    Trajectory t;
    t.values = {0.0, 0.0};
    t.past = LinearPast{{1.0, 0.0}};
    t.innovations = {-1.0, 0.0};
    const auto path = mart_path(d_r0(m, 1, Frequency(pi)), t, 2);
    EXPECT_NEAR(std::abs(path[1] - 1.0), 0.0, 1e-15);
}

TEST(MartPath, IdentityKernelIsZero) {
    Stream s(StreamKey{2, 0, 0});
    const auto t = sample_path(identity_chain(), 30, s);
    for (const cplx& v : mart_path(d_r0(identity_chain(), 4, Frequency(1.0)), t, 30)) EXPECT_EQ(std::abs(v), 0.0);
}

TEST(MartPath, NeedsPast) {
    Trajectory t;
    t.values = {1.0};
    EXPECT_THROW(mart_path(d_r0(LinearAdaptedModel({1.0}), 0, Frequency(0.0)), t, 1), UsageError);
}

TEST(MartPath, QuenchedVarianceIsOrthogonalSum) {
    const auto m = geometric(0.6);
    Stream ps(StreamKey{3, 0, 0});
    const FrozenPast past = freeze_past(m, ps);
    const auto d = d_r0(m, 10, Frequency(1.3));
    const std::size_t n = 40, reps = 1000;
    std::vector<double> sq(reps);
    // E_omega M = D_0, so Var_omega M = E|M - D_0|^2
    const cplx mean = past.linear()->back[0] * *d.scalar;
    for (std::size_t i = 0; i < reps; ++i) {
        Stream s(StreamKey{3, 1, i});
        const auto t = sample_quenched_path(m, past, n, s);
        sq[i] = std::norm(mart_path(d, t, n).back() - mean);
    }
    const MeanEstimate e = jackknife_mean(sq);
    EXPECT_NEAR(e.mean, (n - 1) * d.norm_sq, 4 * e.std_error);
}

TEST(MartPath, ChainIncrementsHaveZeroConditionalMean) {
    const auto m = skew_chain();
    const auto d = d_r0(m, 6, Frequency(0.8));
    Stream ps(StreamKey{4, 0, 0});
    const FrozenPast past = freeze_past(m, ps);
    const std::size_t n = 5, reps = 1000;
    // increment at k = 4 bucketed by the state at k - 1
    std::map<std::size_t, std::vector<double>> re, im;
    for (std::size_t i = 0; i < reps; ++i) {
        Stream s(StreamKey{4, 1, i});
        const auto t = sample_quenched_path(m, past, n, s);
        const cplx inc = d.at(t.states[3], t.states[4]) * oracle::expi(4 * 0.8);
        re[t.states[3]].push_back(inc.real());
        im[t.states[3]].push_back(inc.imag());
    }
    for (const auto& [state, v] : re) {
        if (v.size() < 30) continue;
        const MeanEstimate a = jackknife_mean(v), b = jackknife_mean(im[state]);
        EXPECT_NEAR(a.mean, 0.0, 4 * a.std_error + 1e-12) << state;
        EXPECT_NEAR(b.mean, 0.0, 4 * b.std_error + 1e-12) << state;
    }
}

// ============================================================================
// Approximation error
// ============================================================================

TEST(ApproxError, ExactMatchesInnovationExpansion) {
    const std::vector<double> a = {1.0, 0.5, -0.25, 0.8};
    const LinearAdaptedModel m(a);
    const FrozenPast past = LinearPast{{0.9, -0.3, 1.1, 0.2}};
    for (double th : {0.0, 1.0, pi}) {
        for (std::size_t r : {0u, 1u, 3u, 8u}) {
            for (std::size_t n : {1u, 2u, 7u, 30u}) {
                const cplx fr = fm(a, th, r + 1);
                double want = std::norm(0.9 * fr);
                for (std::size_t mm = 1; mm < n; ++mm) want += std::norm(fm(a, th, n - mm) - fr);
                EXPECT_NEAR(approx_error_exact(m, past, Frequency(th), r, n), want / n, 1e-13);
            }
        }
    }
}

TEST(ApproxError, WhiteNoiseAtZero) {
    const LinearAdaptedModel m({1.0});
    const FrozenPast past = LinearPast{{-1.7}};
    for (std::size_t n : {1u, 10u, 100u}) EXPECT_NEAR(approx_error_exact(m, past, Frequency(0.0), 0, n), 1.7 * 1.7 / n, 1e-14);
    const auto mc = approx_error(m, past, Frequency(0.0), 0, 10, 50, StreamFamily(5, 0));
    EXPECT_NEAR(mc.mean_sq, 1.7 * 1.7 / 10, 1e-12);
    EXPECT_NEAR(mc.std_error, 0.0, 1e-12);
}

TEST(ApproxError, MonteCarloAgreesWithExact) {
    const auto m = LinearAdaptedModel({1.0, 0.5});
    Stream ps(StreamKey{6, 0, 0});
    const FrozenPast past = freeze_past(m, ps);
    const auto e = approx_error(m, past, Frequency(1.2), 1, 64, 2000, StreamFamily(6, 1), Exec{2});
    EXPECT_NEAR(e.mean_sq, approx_error_exact(m, past, Frequency(1.2), 1, 64), 4 * e.std_error);
    EXPECT_GE(e.max_sq, e.mean_sq);
}

TEST(ApproxError, IdentityKernelIsZero) {
    const auto e = approx_error(identity_chain(), ChainPast{1, 1}, Frequency(0.5), 3, 50, 20, StreamFamily(7, 0));
    EXPECT_NEAR(e.mean_sq, 0.0, 1e-20);
    EXPECT_NEAR(e.max_sq, 0.0, 1e-20);
}

TEST(ApproxError, GeometricDecays) {
    const auto m = geometric(0.5);
    Stream ps(StreamKey{8, 0, 0});
    const FrozenPast past = freeze_past(m, ps);
    const Frequency th(pi / 2);
    const auto e = approx_error(m, past, th, 20, 4096, 400, StreamFamily(8, 1));
    EXPECT_LE(e.mean_sq, 1e-3);
    EXPECT_LT(approx_error_exact(m, past, th, 20, 8192), approx_error_exact(m, past, th, 20, 4096));
}

TEST(ApproxError, ThreadIndependent) {
    const auto m = skew_chain();
    const auto a = approx_error(m, ChainPast{0, 2}, Frequency(1.0), 5, 100, 40, StreamFamily(9, 0), Exec{1});
    const auto b = approx_error(m, ChainPast{0, 2}, Frequency(1.0), 5, 100, 40, StreamFamily(9, 0), Exec{3});
    EXPECT_EQ(a.mean_sq, b.mean_sq);
    EXPECT_EQ(a.max_sq, b.max_sq);
}

// ============================================================================
// Dependence conditions
// ============================================================================

TEST(Hannan, WhiteNoise) {
    const auto h = condition_hannan(LinearAdaptedModel({1.0}), 20);
    EXPECT_EQ(h.hannan.partial_sums.front(), 1.0);
    EXPECT_EQ(h.hannan.partial_sums.back(), 1.0);
    EXPECT_EQ(h.hannan.verdict, Verdict::Converged);
}

TEST(Hannan, Geometric) {
    const auto h = condition_hannan(geometric(0.5), 40);
    EXPECT_NEAR(h.hannan.partial_sums.back(), 2.0, 1e-6);
    EXPECT_EQ(h.hannan.verdict, Verdict::Converged);
    EXPECT_EQ(h.weak.verdict, Verdict::Converged);
    // |a_{n+1} - a_n| = 0.5^{n+1}
    EXPECT_NEAR(h.weak.partial_sums.back(), 1.0, 1e-6);
}

TEST(Hannan, MarkovUsesTableNorms) {
    const auto h = condition_hannan(skew_chain(), 80);
    double s = 0.0;
    for (std::size_t k = 0; k <= 80; ++k) s += projection_p0(skew_chain(), k).norm;
    EXPECT_NEAR(h.hannan.partial_sums.back(), s, 1e-12);
    EXPECT_EQ(h.hannan.verdict, Verdict::Converged);
}

TEST(Series, SlowSeriesInconclusive) {
    std::vector<double> inc;
    for (std::size_t k = 1; k <= 100; ++k) inc.push_back(1.0 / static_cast<double>(k));
    const auto r = summarize_series(inc);
    EXPECT_EQ(r.verdict, Verdict::Inconclusive);
    EXPECT_STREQ(verdict_name(r.verdict), "inconclusive");
}

TEST(Series, DivergenceHint) {
    std::vector<double> inc;
    for (std::size_t k = 1; k <= 40; ++k) inc.push_back(std::pow(2.0, static_cast<double>(k)));
    const auto r = summarize_series(inc);
    EXPECT_TRUE(r.divergence_hint);
    EXPECT_EQ(r.verdict, Verdict::Inconclusive);
}

TEST(CondDftNorm, LinearMatchesOrthogonalExpansion) {
    const auto a = oracle::geometric(0.6, 400);
    for (double th : {0.3, pi / 2})
        for (std::size_t n : {1u, 5u, 33u}) {
            double s = 0.0;
            for (std::size_t j = 0; j + n < 400; ++j) s += std::norm(fm(a, th, j + n) - fm(a, th, j));
            EXPECT_NEAR(cond_dft_norm(geometric(0.6), n, Frequency(th)), std::sqrt(s), 1e-12);
        }
}

TEST(CondDftNorm, MarkovMatchesStationaryAverage) {
    const auto f = centered_obs();
    const auto st = stationary_of(kSkew, 3);
    const double th = 2.0;
    for (std::size_t n : {1u, 4u, 20u}) {
        double s = 0.0;
        for (std::size_t i = 0; i < 3; ++i) {
            cplx h = 0.0;
            for (std::size_t k = 0; k < n; ++k) h += oracle::expi(k * th) * oracle::kernel_power_apply(kSkew, 3, f, k)[i];
            s += st[i] * std::norm(h);
        }
        EXPECT_NEAR(cond_dft_norm(skew_chain(), n, Frequency(th)), std::sqrt(s), 1e-12);
    }
}

TEST(MaxwellWoodroofe, Examples) {
    const auto w = condition_mw(LinearAdaptedModel({1.0}), Frequency(1.0), 60);
    for (double v : w.norms) EXPECT_NEAR(v, 1.0, 1e-15);
    double s = 0.0;
    for (std::size_t k = 1; k <= 60; ++k) s += std::pow(static_cast<double>(k), -1.5);
    EXPECT_NEAR(w.series.partial_sums.back(), s, 1e-12);
    EXPECT_EQ(w.series.verdict, Verdict::Converged);
    EXPECT_EQ(condition_mw(geometric(0.5), Frequency(pi / 2), 60).series.verdict, Verdict::Converged);
    const MarkovFunctionalModel zero(2, {0.5, 0.5, 0.5, 0.5}, {0.5, 0.5}, {0.0, 0.0}, true);
    for (double v : condition_mw(zero, Frequency(1.0), 20).series.partial_sums) EXPECT_EQ(v, 0.0);
}

TEST(Ratio, WhiteNoise) {
    const FrozenPast past = LinearPast{{1.5}};
    const auto r = condition_ratio(LinearAdaptedModel({1.0}), past, 20);
    for (double v : r.partial_sums) EXPECT_NEAR(v, 2.25, 1e-15);
    EXPECT_EQ(r.verdict, Verdict::Converged);
}

TEST(Ratio, GeometricAndIdentity) {
    const auto m = geometric(0.5);
    Stream ps(StreamKey{10, 0, 0});
    const FrozenPast past = freeze_past(m, ps);
    const auto r = condition_ratio(m, past, 60);
    EXPECT_EQ(r.verdict, Verdict::Converged);
    // E_0 X_k = sum_j a_{k+j} x_{-j} over the truncated coefficients
    const auto& back = past.linear()->back;
    const std::size_t depth = m.linear()->depth();
    auto e0 = [&](std::size_t k) {
        double s = 0.0;
        for (std::size_t j = 0; j < back.size() && k + j <= depth; ++j)
            s += std::pow(0.5, static_cast<double>(k + j)) * back[j];
        return s;
    };
    EXPECT_NEAR(r.partial_sums[1], std::pow(e0(1) - e0(0), 2) + std::pow(e0(2) - e0(1), 2) / 2, 1e-12);
    for (double v : condition_ratio(identity_chain(), ChainPast{0, 0}, 20).partial_sums) EXPECT_EQ(v, 0.0);
}
