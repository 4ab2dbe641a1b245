// Acceptance suite: one PASS/FAIL line per criterion; tolerances are pinned
// here. Usage: acceptance <path-to-quench-dft> [--expect-fail 7,8] [--only 3]
// Exit status is 0 when the failing set equals the expected-fail set.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "quench/counterexample.hpp"
#include "quench/errors.hpp"
#include "quench/fourier.hpp"
#include "quench/martingale.hpp"
#include "quench/models.hpp"
#include "quench/quenched_lab.hpp"
#include "quench/spectral.hpp"

using namespace quench;
namespace fs = std::filesystem;

namespace {

constexpr double pi = std::numbers::pi;

// pinned tolerances
constexpr double kCesaroTol = 1e-12;
constexpr double kDensityTol = 0.08;
constexpr double kKs = 0.0456;
constexpr double kCorr = 0.08;
constexpr double kApproxCeiling = 1e-3;
constexpr double kStderrs = 3.0;
constexpr double kCycleBound = 1.05e-3;
constexpr double kCycleCeiling = 0.01;
constexpr double kNormTol = 1e-6;
constexpr std::size_t kConditionsK = 60;

const Thresholds kPinned{kKs, kCorr};

ProcessModel geometric() { return LinearAdaptedModel({}, GeometricTail{0.5, 1.0}); }

FrozenPast past_of(const ProcessModel& m, std::uint64_t seed) {
    Stream s(StreamKey{seed, 77, 0});
    return freeze_past(m, s);
}

cplx expi(double x) { return std::exp(cplx(0.0, x)); }

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::string report_line(const TestReport& r) {
    return fmt("ks_re=%.4f ks_im=%.4f corr=%.4f", r.ks_re, r.ks_im, r.corr_re_im);
}

// ---------------------------------------------------------------------------

Outcome cesaro_identity() {
    std::mt19937_64 gen(20240601);
    std::normal_distribution<double> z;
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t h = 8;
        std::vector<cplx> g(2 * h + 1);
        g[h] = z(gen);
        for (std::size_t k = 1; k <= h; ++k) {
            g[h + k] = {z(gen), z(gen)};
            g[h - k] = std::conj(g[h + k]);
        }
        const TwoSidedSequence c(h, g);
        const double th = std::uniform_real_distribution<double>(0.0, 2 * pi)(gen);
        for (std::size_t n = 1; n <= 8; ++n) {
            cplx brute = 0.0;
            for (std::size_t j = 0; j < n; ++j)
                for (std::size_t k = 0; k < n; ++k) {
                    const long d = static_cast<long>(j) - static_cast<long>(k);
                    brute += g[static_cast<std::size_t>(d + static_cast<long>(h))] * expi(d * th);
                }
            brute /= static_cast<double>(n);
            const auto f = fejer_cesaro_forms(c, Frequency(th), n);
            worst = std::max({worst, std::abs(f.nested - brute), std::abs(f.triangular - brute)});
        }
    }
    return {worst <= kCesaroTol, fmt("max deviation from brute force %.3e (tol %.0e)", worst, kCesaroTol)};
}

Outcome spectral_estimator() {
    const auto est = density_variance_est(geometric(), Frequency(pi / 2), 4096, 1000, StreamFamily(2, 0));
    const double err = std::abs(est.estimate - 0.8);
    return {err <= kDensityTol, fmt("estimate %.4f (se %.4f) vs 0.8, |diff| %.4f <= %.2f", est.estimate,
                                    est.std_error, err, kDensityTol)};
}

Outcome quenched_clt() {
    const auto m = geometric();
    LabOptions opt;
    opt.thresholds = kPinned;
    bool all = true;
    std::string detail;
    for (std::uint64_t p = 0; p < 3; ++p) {
        const auto run = run_clt(m, Frequency(pi / 2), 4096, 2000, SamplingMode::Quenched, Centering::Conditional,
                                 past_of(m, 30 + p), StreamFamily(3, static_cast<std::uint32_t>(p)), opt);
        const bool ok = run.report.ks_re <= kKs && run.report.ks_im <= kKs && std::abs(run.report.corr_re_im) <= kCorr &&
                        std::abs(run.sigma2 - 0.8) < 1e-9;
        all = all && ok;
        detail += fmt("past %d: %s; ", static_cast<int>(p), report_line(run.report).c_str());
    }
    return {all, detail + fmt("limits ks %.4f corr %.2f", kKs, kCorr)};
}

double approx_oracle(const std::vector<double>& a, double x0, double th, std::size_t r, std::size_t n) {
    auto f = [&](std::size_t m) {
        cplx s = 0.0;
        for (std::size_t j = 0; j < m && j < a.size(); ++j) s += a[j] * expi(j * th);
        return s;
    };
    const cplx fr = f(r + 1);
    double s = std::norm(x0 * fr);
    const std::size_t settle = a.size() + 1;
    const double tail = std::norm(f(settle) - fr);
    for (std::size_t m = 1; m < n; ++m) s += m < settle ? std::norm(f(m) - fr) : tail;
    return s / static_cast<double>(n);
}

Outcome martingale_approx() {
    const auto m = geometric();
    const FrozenPast past = past_of(m, 40);
    const std::size_t depth = m.linear()->depth();
    std::vector<double> a(depth + 1);
    for (std::size_t j = 0; j <= depth; ++j) a[j] = std::pow(0.5, static_cast<double>(j));
    const double x0 = past.linear()->x_minus(0);
    const Frequency th(pi / 2);
    const auto e1 = approx_error(m, past, th, 20, 4096, 2000, StreamFamily(4, 0));
    const auto e2 = approx_error(m, past, th, 20, 8192, 2000, StreamFamily(4, 1));
    const double o1 = approx_oracle(a, x0, pi / 2, 20, 4096);
    const bool near = std::abs(e1.mean_sq - o1) <= kStderrs * e1.std_error;
    const bool small = e1.mean_sq <= kApproxCeiling;
    const double se_half = std::hypot(e2.std_error, e1.std_error / 2);
    const bool halves = std::abs(e2.mean_sq - e1.mean_sq / 2) <= kStderrs * se_half;
    return {near && small && halves,
            fmt("mean_sq %.4e (se %.1e) oracle %.4e; n=8192 %.4e vs half %.4e (se %.1e)", e1.mean_sq, e1.std_error, o1,
                e2.mean_sq, e1.mean_sq / 2, se_half)};
}

Outcome ergodic_cycle() {
    Stream s(StreamKey{5, 0, 0});
    const auto t = sample_quenched_path(CycleRotationModel(4), ChainPast{0, 3}, 1000, s);
    std::size_t bad = 0;
    for (std::size_t n = 1; n <= 1000; ++n)
        if (fourier_average(std::span<const cplx>(t.values.data(), n), Frequency(3 * pi / 2)) != cplx(1.0)) ++bad;
    const double bound = 2.0 / (1000.0 * std::abs(1.0 - expi(1.0 + pi / 2)));
    const double a = std::abs(fourier_average(t, Frequency(1.0)));
    const bool ok = bad == 0 && a <= kCycleCeiling && a <= bound && std::abs(bound - kCycleBound) < 1e-5;
    return {ok, fmt("A_n(3pi/2) != 1 for %zu of 1000 n; |A_1000(1.0)| = %.3e <= bound %.3e", bad, a, bound)};
}

Outcome sigma2_recovery() {
    const double d = d_r0(geometric(), 60, Frequency(pi / 2)).norm_sq;
    const double exact = density_exact(geometric(), Frequency(pi / 2)).estimate;
    const bool ok = std::abs(d - exact) <= kNormTol && std::abs(exact - 0.8) <= 1e-12;
    return {ok, fmt("||D_60,0||^2 = %.10f, density_exact = %.10f", d, exact)};
}

Outcome counterexample_inequality() {
    const auto hand = verify_block_inequality(hand_spec({1, 8}), 1, Frequency(1.0), 5000, StreamFamily(7, 0));
    const bool hand_ok = hand.p_lhs >= hand.rhs - kStderrs * hand.se_lhs;
    std::string detail = fmt("hand (1,8): lhs %.4f rhs %.4f se %.4f %s; ", hand.p_lhs, hand.rhs, hand.se_lhs,
                             hand_ok ? "ok" : "violated");
    bool calibrated_ok = false;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        const auto spec = build_spec(2, 0.25, default_theta_grid(), 400, 100000, StreamFamily(7, 1));
        const auto probe = divergence_probe(spec, Frequency(1.0), 2000, StreamFamily(7, 2));
        calibrated_ok = true;
        for (std::size_t k = 0; k < probe.size(); ++k) {
            const double target = 1.0 - std::ldexp(1.0, -static_cast<int>(k + 2));
            calibrated_ok = calibrated_ok && probe[k].p >= target - kStderrs * probe[k].std_error;
            detail += fmt("level %zu p %.4f target %.4f; ", k + 1, probe[k].p, target);
        }
    } catch (const CalibrationInfeasibleError& e) {
        detail += fmt("calibration K=2 tau=0.25 infeasible at level %zu: N=%zu reached %.4f < target %.4f",
                      e.level(), e.n_reached(), e.achieved_probability(), e.target_probability());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {hand_ok && calibrated_ok, detail + fmt(" (%.0f s)", secs)};
}

Outcome centering_needed() {
    // Needs the calibrated spec of the previous criterion, which is infeasible.
    std::string detail = "blocked: no calibrated K=2 tau=0.25 spec";
    try {
        const auto spec = build_spec(2, 0.02, default_theta_grid(), 400, 100000, StreamFamily(2024, 7));
        for (double th : {1.0, 2.0}) {
            const auto c = centering_necessity(spec, Frequency(th), 2000, StreamFamily(3, 9));
            std::cout << fmt("INFO  8: tau=0.02 theta=%.1f n=%zu |shift|=%.3f none: %s %s | conditional: %s %s\n", th, c.n,
                             std::abs(c.shift), report_line(c.uncentered.report).c_str(),
                             c.uncentered.report.pass ? "pass" : "fail", report_line(c.centered.report).c_str(),
                             c.centered.report.pass ? "pass" : "fail");
        }
    } catch (const Error& e) {
        detail += std::string("; diagnostic failed: ") + e.what();
    }
    return {false, detail};
}

Outcome condition_checkers() {
    const auto g = geometric();
    const auto h = condition_hannan(g, kConditionsK);
    const auto mw = condition_mw(g, Frequency(pi / 2), kConditionsK);
    const auto ratio = condition_ratio(g, past_of(g, 90), kConditionsK);
    const bool geo = h.hannan.verdict == Verdict::Converged && h.weak.verdict == Verdict::Converged &&
                     mw.series.verdict == Verdict::Converged && ratio.verdict == Verdict::Converged &&
                     std::abs(h.hannan.partial_sums.back() - 2.0) <= 1e-6 &&
                     std::abs(h.weak.partial_sums.back() - 1.0) <= 1e-6;

    const LinearAdaptedModel white({1.0});
    const auto wh = condition_hannan(white, kConditionsK);
    const auto wmw = condition_mw(white, Frequency(1.0), kConditionsK);
    const double x0 = 1.5;
    const auto wr = condition_ratio(white, LinearPast{{x0}}, kConditionsK);
    double p = 0.0;
    for (std::size_t k = 1; k <= kConditionsK; ++k) p += std::pow(static_cast<double>(k), -1.5);
    bool white_ok = wh.hannan.partial_sums.back() == 1.0 && std::abs(wmw.series.partial_sums.back() - p) <= 1e-12;
    for (double v : wmw.norms) white_ok = white_ok && std::abs(v - 1.0) <= 1e-15;
    for (double v : wr.partial_sums) white_ok = white_ok && std::abs(v - x0 * x0) <= 1e-15;
    return {geo && white_ok,
            fmt("geometric: hannan %.8f (tail %.1e) weak %.8f (tail %.1e) mw %.6f (tail %.3f) ratio %.6f (tail %.1e); "
                "white: hannan %.1f mw %.6f ratio %.2f",
                h.hannan.partial_sums.back(), h.hannan.tail, h.weak.partial_sums.back(), h.weak.tail,
                mw.series.partial_sums.back(), mw.series.tail, ratio.partial_sums.back(), ratio.tail,
                wh.hannan.partial_sums.back(), wmw.series.partial_sums.back(), wr.partial_sums.back())};
}

Outcome invariance() {
    const auto m = geometric();
    LabOptions opt;
    opt.thresholds = kPinned;
    const auto inv = run_invariance(m, past_of(m, 100), Frequency(pi / 2), 4096, 2000, {0.25, 0.5, 1.0},
                                    StreamFamily(10, 0), opt);
    double ks = 0.0;
    for (const auto& c : inv.report.components) ks = std::max({ks, c.ks_re, c.ks_im});
    // the run's own corr field holds the worst pairwise correlation
    const double corr = std::abs(inv.report.corr_re_im);
    const bool inv_ok = ks <= kKs && corr <= kCorr && inv.report.components.size() == 3;
    const auto avg = averaged_frequency_run(m, past_of(m, 101), 4096, 2000, StreamFamily(10, 1), opt);
    const bool avg_ok = avg.report.ks_re <= kKs && avg.report.ks_im <= kKs && std::abs(avg.report.corr_re_im) <= kCorr;
    return {inv_ok && avg_ok, fmt("fdd worst ks %.4f worst |corr| %.4f; averaged %s (dropped %zu)", ks, corr,
                                  report_line(avg.report).c_str(), avg.dropped)};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome determinism(const std::string& cli) {
    const fs::path dir = fs::temp_directory_path() / "quench_acceptance_det";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const fs::path model = dir / "ar05.json";
    std::ofstream(model) << R"({"variant":"LinearAdaptedModel","coeffs":[],"tail":{"rho":0.5,"scale":1.0}})";
    const std::vector<std::string> commands = {
        "simulate --n 2048",
        "spectral --method variance --n 1024 --reps 200",
        "quenched-clt --n 2048 --reps 500",
        "quenched-clt --n 2048 --reps 500 --mode annealed --center none",
        "mart-approx --n 1024 --reps 200 --r 10",
        "invariance --n 1024 --reps 300",
        "averaged --n 1024 --reps 300",
        "conditions --K 60",
    };
    std::size_t same = 0;
    std::string diffs;
    for (std::size_t i = 0; i < commands.size(); ++i) {
        const std::string out = (dir / ("c" + std::to_string(i))).string();
        std::string files[2][2];
        for (int t = 0; t < 2; ++t) {
            const std::string cmd = "\"" + cli + "\" " + commands[i] + " --model \"" + model.string() +
                                    "\" --seed 11 --out \"" + out + "\" --threads " + (t ? "4" : "1") + " >/dev/null 2>&1";
            const int rc = std::system(cmd.c_str());
            (void)rc;
            files[t][0] = slurp(out + ".csv");
            files[t][1] = slurp(out + ".json");
        }
        if (!files[0][1].empty() && files[0][0] == files[1][0] && files[0][1] == files[1][1])
            ++same;
        else
            diffs += " [" + commands[i] + "]";
    }
    fs::remove_all(dir);
    return {same == commands.size(),
            fmt("%zu of %zu commands byte-identical at --threads 1 vs 4", same, commands.size()) + diffs};
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: acceptance <quench-dft> [--expect-fail 7,8] [--only N]\n";
        return 64;
    }
    const std::string cli = argv[1];
    std::set<int> expected, only;
    auto parse_list = [](const std::string& s, std::set<int>& into) {
        std::stringstream ss(s);
        std::string item;
        while (std::getline(ss, item, ',')) into.insert(std::stoi(item));
    };
    for (int i = 2; i + 1 < argc; i += 2) {
        const std::string flag = argv[i];
        if (flag == "--expect-fail") parse_list(argv[i + 1], expected);
        else if (flag == "--only") parse_list(argv[i + 1], only);
    }

    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"cesaro identity", cesaro_identity},
        {"spectral density estimator", spectral_estimator},
        {"quenched clt", quenched_clt},
        {"martingale approximation", martingale_approx},
        {"ergodic theorem for dfts", ergodic_cycle},
        {"sigma2 recovery", sigma2_recovery},
        {"counterexample inequality", counterexample_inequality},
        {"necessity of centering", centering_needed},
        {"condition checkers", condition_checkers},
        {"invariance fdds", invariance},
        {"determinism", [&] { return determinism(cli); }},
    };

    std::set<int> failed;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i + 1);
        if (!only.empty() && !only.count(id)) continue;
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!o.pass) failed.insert(id);
        std::cout << (o.pass ? "PASS" : "FAIL") << " " << id << " " << criteria[i].first << ": " << o.detail
                  << fmt(" [%.1fs]", secs) << std::endl;
    }
    std::set<int> want;
    for (int id : expected)
        if (only.empty() || only.count(id)) want.insert(id);
    return failed == want ? 0 : 1;
}
