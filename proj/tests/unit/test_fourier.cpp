#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "quench/errors.hpp"
#include "quench/fourier.hpp"
#include "quench/models.hpp"

using namespace quench;
using oracle::pi;

namespace {

std::vector<cplx> random_values(std::size_t n, unsigned seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> z;
    std::vector<cplx> v(n);
    for (auto& x : v) x = {z(gen), z(gen)};
    return v;
}

Trajectory cycle_path(std::size_t n, std::size_t start) {
    Stream s(StreamKey{1, 0, 0});
    return sample_quenched_path(CycleRotationModel(4), ChainPast{start, (start + 3) % 4}, n, s);
}

}  // namespace

TEST(Dft, Examples) {
    EXPECT_NEAR(std::abs(dft(std::vector<cplx>{1, 1, 1}, Frequency(0.0)).value - 3.0), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(dft(std::vector<cplx>{1, 1, 1, 1}, Frequency(pi)).value), 0.0, 1e-15);
    for (double th : {0.0, 0.3, 2.0, 5.5})
        EXPECT_NEAR(std::abs(dft(std::vector<cplx>{2, 0, 0}, Frequency(th)).value - 2.0), 0.0, 1e-15);
}

TEST(Dft, RecordsLengthAndFrequency) {
    const DftValue d = dft(std::vector<cplx>{1, 2, 3, 4, 5}, Frequency(1.25));
    EXPECT_EQ(d.n, 5u);
    EXPECT_EQ(d.theta.radians(), 1.25);
}

TEST(Dft, MatchesNaiveSum) {
    const auto x = random_values(3000, 1);
    for (double th : {0.0, 0.01, 1.0, pi, 4.4}) {
        const cplx want = oracle::dft(x, th, x.size());
        EXPECT_NEAR(std::abs(dft(x, Frequency(th)).value - want), 0.0, 1e-10 * std::max(1.0, std::abs(want)));
    }
}

TEST(Dft, Linearity) {
    const auto x = random_values(500, 2), y = random_values(500, 3);
    const cplx a(0.7, -1.2), b(-2.0, 0.4);
    std::vector<cplx> z(500);
    for (std::size_t i = 0; i < 500; ++i) z[i] = a * x[i] + b * y[i];
    for (double th : {0.2, 2.9}) {
        const cplx lhs = dft(z, Frequency(th)).value;
        const cplx rhs = a * dft(x, Frequency(th)).value + b * dft(y, Frequency(th)).value;
        EXPECT_NEAR(std::abs(lhs - rhs), 0.0, 1e-12 * std::max(1.0, std::abs(lhs)));
    }
}

TEST(Dft, LongConstantSeriesMatchesGeometricSum) {
    const std::size_t n = 1000000;
    const std::vector<cplx> ones(n, cplx(1.0));
    const double th = 0.1;
    // (1 - e^{in th}) / (1 - e^{i th}) evaluated with long-double trig
    const std::complex<long double> z(std::cos(0.1L), std::sin(0.1L));
    const std::complex<long double> zn(std::cos(0.1L * n), std::sin(0.1L * n));
    const std::complex<long double> closed = (1.0L - zn) / (1.0L - z);
    const cplx want(static_cast<double>(closed.real()), static_cast<double>(closed.imag()));
    EXPECT_LE(std::abs(dft(ones, Frequency(th)).value - want) / std::abs(want), 1e-9);
}

TEST(Dft, PartialSumsAreConsistent) {
    const auto x = random_values(100, 4);
    const auto sums = partial_dfts(x, Frequency(0.9));
    ASSERT_EQ(sums.size(), 100u);
    for (std::size_t k : {1u, 10u, 57u, 100u})
        EXPECT_NEAR(std::abs(sums[k - 1] - oracle::dft(x, 0.9, k)), 0.0, 1e-12);
}

TEST(FourierAverage, Examples) {
    EXPECT_NEAR(std::abs(fourier_average(std::vector<cplx>{1, 1, 1, 1}, Frequency(0.0)) - 1.0), 0.0, 1e-15);
}

TEST(FourierAverage, CycleEigenfrequencyIsExactlyOne) {
    const Trajectory t = cycle_path(1000, 0);
    for (std::size_t n = 1; n <= 1000; ++n) {
        const std::span<const cplx> head(t.values.data(), n);
        EXPECT_EQ(fourier_average(head, Frequency(3 * pi / 2)), cplx(1.0)) << n;
    }
}

TEST(FourierAverage, CycleOffSpectrumDecays) {
    const Trajectory t = cycle_path(1000, 0);
    const double bound = 2.0 / (1000.0 * std::abs(1.0 - oracle::expi(1.0 + pi / 2)));
    EXPECT_NEAR(bound, 1.05e-3, 1e-5);
    EXPECT_LE(std::abs(fourier_average(t, Frequency(1.0))), bound);
}

TEST(Periodogram, Examples) {
    EXPECT_EQ(periodogram(std::vector<cplx>(7, cplx(0.0)), Frequency(1.0)), 0.0);
    EXPECT_NEAR(periodogram(std::vector<cplx>{1, 1}, Frequency(0.0)), 2.0, 1e-15);
    EXPECT_NEAR(periodogram(std::vector<cplx>{1, -1}, Frequency(pi)), 2.0, 1e-15);
}

TEST(PathValues, Examples) {
    const std::vector<cplx> x{1, 1, 1, 1};
    const std::vector<double> grid{0.0, 0.5, 1.0};
    const PathSample p = path_values(x, Frequency(0.0), grid);
    EXPECT_EQ(p.values[0], cplx(0.0));
    EXPECT_NEAR(std::abs(p.values[1] - 1.0), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(p.values[2] - 2.0), 0.0, 1e-15);
    EXPECT_EQ(p.times, grid);
}

TEST(PathValues, EndpointIdentity) {
    const auto x = random_values(1234, 5);
    const std::vector<double> grid{0.1, 0.77, 1.0};
    const Frequency th(2.1);
    const auto p = path_values(x, th, grid);
    const double n = static_cast<double>(x.size());
    EXPECT_EQ(p.values.back(), dft(x, th).value * (1.0 / std::sqrt(n)));
    EXPECT_NEAR(std::abs(p.values.back() * std::sqrt(n) - dft(x, th).value), 0.0, 1e-12);
}

TEST(PathValues, FloorIndexing) {
    const auto x = random_values(10, 6);
    const std::vector<double> grid{0.09, 0.1, 0.35, 0.99};
    const auto p = path_values(x, Frequency(0.5), grid);
    const std::size_t idx[] = {0, 1, 3, 9};
    for (std::size_t g = 0; g < grid.size(); ++g)
        EXPECT_NEAR(std::abs(p.values[g] - oracle::dft(x, 0.5, idx[g]) / std::sqrt(10.0)), 0.0, 1e-13);
}

TEST(PathValues, RejectsBadGrid) {
    const std::vector<cplx> x{1, 2};
    EXPECT_THROW(path_values(x, Frequency(0.0), std::vector<double>{1.2}), UsageError);
    EXPECT_THROW(path_values(x, Frequency(0.0), std::vector<double>{0.5, 0.2}), UsageError);
}

TEST(Cesaro, Examples) {
    std::vector<cplx> delta(7, 0.0);
    delta[3] = 1.0;
    const TwoSidedSequence c0(3, delta);
    for (std::size_t n = 1; n <= 4; ++n)
        for (double th : {0.0, 1.0, 3.0}) EXPECT_NEAR(std::abs(fejer_cesaro(c0, Frequency(th), n) - 1.0), 0.0, 1e-15);
    const TwoSidedSequence c1(1, {0.5, 0.0, 0.5});
    EXPECT_NEAR(std::abs(fejer_cesaro(c1, Frequency(0.0), 2) - 0.5), 0.0, 1e-15);
}

TEST(Cesaro, FormsAgreeWithBruteForce) {
    std::mt19937_64 gen(7);
    std::normal_distribution<double> z;
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t N = 7;
        std::vector<cplx> v(2 * N + 1);
        for (auto& c : v) c = {z(gen), z(gen)};
        const TwoSidedSequence c(N, v);
        const double th = 2 * pi * std::uniform_real_distribution<double>()(gen);
        for (std::size_t n = 1; n <= 8; ++n) {
            cplx nested = 0.0, tri = 0.0;
            for (std::size_t j = 0; j < n; ++j)
                for (long k = -static_cast<long>(j); k <= static_cast<long>(j); ++k)
                    nested += c[k] * oracle::expi(static_cast<double>(k) * th);
            nested /= static_cast<double>(n);
            for (long k = 1 - static_cast<long>(n); k < static_cast<long>(n); ++k)
                tri += (1.0 - std::abs(static_cast<double>(k)) / static_cast<double>(n)) * c[k] *
                       oracle::expi(static_cast<double>(k) * th);
            const CesaroForms f = fejer_cesaro_forms(c, Frequency(th), n);
            EXPECT_NEAR(std::abs(f.nested - nested), 0.0, 1e-12);
            EXPECT_NEAR(std::abs(f.triangular - tri), 0.0, 1e-12);
            EXPECT_NEAR(std::abs(f.nested - f.triangular), 0.0, 1e-12);
            if (n == 3) EXPECT_NEAR(std::abs(f.nested - f.triangular), 0.0, 1e-14);
        }
    }
}

TEST(Cesaro, OrderBeyondCoefficientsRejected) {
    const TwoSidedSequence c(2, {1, 1, 1, 1, 1});
    EXPECT_NO_THROW(fejer_cesaro(c, Frequency(0.0), 3));
    EXPECT_THROW(fejer_cesaro(c, Frequency(0.0), 4), UsageError);
    EXPECT_THROW(TwoSidedSequence(2, {1, 1, 1}), UsageError);
}

TEST(HuntYoung, SingleTerm) {
    std::vector<double> grid(64);
    for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = 2 * pi * i / 64.0;
    const std::vector<cplx> a{1, 0, 0, 0};
    const auto r = huntyoung_stat(a, grid, 4);
    EXPECT_NEAR(r.lhs, 1.0, 1e-14);
    EXPECT_NEAR(r.ratio, 1.0, 1e-14);
    EXPECT_EQ(r.max_order, 4u);
}

TEST(HuntYoung, TwoTermsMatchPointwiseMax) {
    const std::size_t pts = 256;
    std::vector<double> grid(pts);
    double want = 0.0;
    for (std::size_t i = 0; i < pts; ++i) {
        grid[i] = 2 * pi * i / static_cast<double>(pts);
        want += std::max(1.0, std::norm(1.0 + oracle::expi(grid[i]))) / static_cast<double>(pts);
    }
    const auto r = huntyoung_stat(std::vector<cplx>{1, 1}, grid, 2);
    EXPECT_NEAR(r.rhs, 2.0, 1e-15);
    EXPECT_NEAR(r.lhs, want, 1e-12);
    EXPECT_GE(r.ratio, 0.5);
    EXPECT_LE(r.ratio, 2.0);
}

TEST(HuntYoung, GeometricStableUnderDoubling) {
    std::vector<double> grid(512);
    for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = 2 * pi * i / 512.0;
    std::vector<cplx> a(256);
    for (std::size_t j = 0; j < a.size(); ++j) a[j] = std::pow(0.5, static_cast<double>(j));
    const auto r64 = huntyoung_stat(a, grid, 64);
    const auto r128 = huntyoung_stat(a, grid, 128);
    EXPECT_TRUE(std::isfinite(r64.ratio));
    EXPECT_LE(std::abs(r128.ratio / r64.ratio - 1.0), 0.01);
}

TEST(HuntYoung, ZeroSequenceIsDegenerate) {
    const std::vector<double> grid{0.0, 1.0};
    EXPECT_THROW(huntyoung_stat(std::vector<cplx>{0, 0}, grid, 2), DegenerateError);
    EXPECT_THROW(huntyoung_stat(std::vector<cplx>{1}, std::vector<double>{}, 2), UsageError);
}
