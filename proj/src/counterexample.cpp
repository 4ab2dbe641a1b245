#include "quench/counterexample.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "quench/errors.hpp"
#include "quench/model_io.hpp"
#include "quench/rotor.hpp"
#include "quench/stats.hpp"

namespace quench {

using nlohmann::json;

namespace {

constexpr std::size_t kMaxPastDepth = 50'000'000;

cplx phase(std::size_t m, double theta) {
    return std::polar(1.0, std::fmod(static_cast<double>(m) * theta, kTwoPi));
}

// back[j] = x_{-j}, j = 0..depth.
std::vector<double> draw_past(InnovationKind kind, std::size_t depth, Stream& s) {
    std::vector<double> back(depth + 1);
    for (auto& x : back) x = draw_innovation(kind, s);
    return back;
}

std::vector<cplx> zeta_prefix(const std::vector<double>& back, double theta) {
    return zeta_sums(back, Frequency(theta));
}

ProbabilityEstimate proportion(const std::vector<char>& hits) {
    double count = 0.0;
    for (char h : hits) count += h ? 1.0 : 0.0;
    const double n = static_cast<double>(hits.size());
    const double p = count / n;
    return {p, std::sqrt(p * (1.0 - p) / n)};
}

void check_grid(const std::vector<double>& grid) {
    if (grid.empty()) throw UsageError("calibration frequency grid is empty");
}

void check_level(const CounterexampleSpec& spec, std::size_t k) {
    if (k == 0 || k > spec.levels.size()) throw UsageError("level index outside the spec");
    if (spec.depth() > kMaxPastDepth) throw ResourceError("frozen past depth exceeds the memory budget");
}

}  // namespace

std::vector<cplx> zeta_sums(std::span<const double> back, Frequency theta) {
    std::vector<cplx> z(back.size());
    Rotor rot(kTwoPi - theta.radians());
    cplx acc = 0.0;
    for (std::size_t j = 0; j < back.size(); ++j) {
        acc += back[j] * rot.value();
        z[j] = acc;
        rot.advance();
    }
    return z;
}

cplx cond_exp_dft_zeta(std::span<const double> coeffs, std::span<const cplx> zeta, Frequency theta, std::size_t n) {
    if (zeta.size() < coeffs.size()) throw UsageError("zeta sums shorter than the coefficient support");
    CompensatedSum acc;
    for (std::size_t m = 0; m < coeffs.size(); ++m) {
        if (coeffs[m] == 0.0) continue;
        const cplx older = m >= n ? zeta[m - n] : cplx(0.0);
        acc.add(coeffs[m] * phase(m, theta.radians()) * (zeta[m] - older));
    }
    return acc.value();
}

std::size_t CounterexampleSpec::previous_n(std::size_t k) const {
    if (k == 0) throw UsageError("level 0 has no predecessor");
    return k == 1 ? n0 : levels.at(k - 2).n;
}

LinearAdaptedModel CounterexampleSpec::model() const {
    std::vector<double> prefix(depth() + 1, 0.0);
    for (const auto& lv : levels) prefix[lv.n] = lv.a;
    return LinearAdaptedModel(std::move(prefix), std::nullopt, innovation);
}

double coefficient_rule(std::size_t k, std::size_t n_prev) {
    return std::ldexp(1.0, -static_cast<int>(k)) / std::sqrt(static_cast<double>(n_prev));
}

std::vector<double> default_theta_grid(bool include_axis, std::size_t points) {
    std::vector<double> grid;
    if (include_axis) grid.push_back(0.0);
    for (std::size_t j = 0; j < points; ++j)
        grid.push_back(kTwoPi * (static_cast<double>(j) + 0.5) / static_cast<double>(points));
    if (include_axis) grid.push_back(std::numbers::pi);
    std::sort(grid.begin(), grid.end());
    return grid;
}

CounterexampleSpec hand_spec(const std::vector<std::size_t>& n, std::vector<double> theta_grid,
                             const std::vector<double>& gammas) {
    if (n.size() < 2) throw UsageError("hand spec needs n_0 and at least one block length");
    if (n[0] == 0) throw UsageError("n_0 must be at least 1");
    CounterexampleSpec spec;
    spec.n0 = n[0];
    spec.theta_grid = theta_grid.empty() ? default_theta_grid() : std::move(theta_grid);
    for (std::size_t k = 1; k < n.size(); ++k) {
        if (n[k] <= n[k - 1]) throw UsageError("block lengths must be strictly increasing");
        CounterexampleLevel lv;
        lv.k = k;
        lv.n = n[k];
        lv.a = coefficient_rule(k, n[k - 1]);
        lv.gamma = k - 1 < gammas.size() ? gammas[k - 1] : 0.0;
        lv.threshold = (lv.gamma + std::ldexp(1.0, static_cast<int>(k) + 1)) / lv.a;
        lv.target_probability = 1.0 - std::ldexp(1.0, -static_cast<int>(k) - 1);
        spec.levels.push_back(lv);
    }
    spec.tau = 1.0;
    return spec;
}

// ============================================================================
// Serialization
// ============================================================================

json spec_to_json(const CounterexampleSpec& spec) {
    json levels = json::array();
    for (const auto& lv : spec.levels)
        levels.push_back({{"k", lv.k},
                          {"n", lv.n},
                          {"a", lv.a},
                          {"gamma", lv.gamma},
                          {"threshold", lv.threshold},
                          {"target_probability", lv.target_probability},
                          {"achieved_probability", lv.achieved_probability}});
    return {{"n0", spec.n0},         {"a0", spec.a0},     {"levels", levels},
            {"theta_grid", spec.theta_grid}, {"tau", spec.tau}, {"n_max", spec.n_max},
            {"reps", spec.reps},     {"innovation", innovation_name(spec.innovation)}};
}

CounterexampleSpec spec_from_json(const json& j) {
    static const std::set<std::string> top = {"n0", "a0", "levels", "theta_grid", "tau", "n_max", "reps", "innovation"};
    static const std::set<std::string> per_level = {"k", "n", "a", "gamma", "threshold", "target_probability",
                                                    "achieved_probability"};
    if (!j.is_object()) throw ModelValidationError("counterexample spec must be a JSON object");
    for (const auto& [key, _] : j.items())
        if (!top.count(key)) throw ModelValidationError("counterexample spec: unknown key '" + key + "'");
    CounterexampleSpec spec;
    try {
        spec.n0 = j.value("n0", std::size_t{1});
        spec.a0 = j.value("a0", 0.5);
        spec.tau = j.value("tau", 0.25);
        spec.n_max = j.value("n_max", std::size_t{100000});
        spec.reps = j.value("reps", std::size_t{0});
        if (j.contains("innovation")) spec.innovation = innovation_from_name(j.at("innovation").get<std::string>());
        spec.theta_grid = j.contains("theta_grid") ? j.at("theta_grid").get<std::vector<double>>()
                                                   : default_theta_grid();
        std::size_t prev = spec.n0;
        for (const auto& e : j.at("levels")) {
            for (const auto& [key, _] : e.items())
                if (!per_level.count(key)) throw ModelValidationError("counterexample level: unknown key '" + key + "'");
            CounterexampleLevel lv;
            lv.k = e.at("k").get<std::size_t>();
            lv.n = e.at("n").get<std::size_t>();
            lv.a = e.at("a").get<double>();
            lv.gamma = e.value("gamma", 0.0);
            lv.threshold = e.value("threshold", 0.0);
            lv.target_probability = e.value("target_probability", 0.0);
            lv.achieved_probability = e.value("achieved_probability", 0.0);
            if (lv.k != spec.levels.size() + 1) throw ModelValidationError("counterexample levels must be numbered 1..K");
            if (lv.n <= prev) throw ModelValidationError("counterexample block lengths must be strictly increasing");
            if (lv.a != coefficient_rule(lv.k, prev))
                throw ModelValidationError("counterexample coefficient at level " + std::to_string(lv.k) +
                                           " violates a = 2^-k / sqrt(n_{k-1})");
            prev = lv.n;
            spec.levels.push_back(lv);
        }
    } catch (const json::exception& e) {
        throw ModelValidationError(std::string("counterexample spec: ") + e.what());
    }
    return spec;
}

void save_spec(const CounterexampleSpec& spec, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw UsageError("cannot write " + path.string());
    out << spec_to_json(spec).dump(2) << '\n';
}

CounterexampleSpec load_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ModelValidationError(std::string("counterexample spec: ") + e.what());
    }
    return spec_from_json(j);
}

// ============================================================================
// Calibration
// ============================================================================

double calibrate_gamma(const CounterexampleSpec& so_far, std::size_t k, std::size_t reps,
                       const StreamFamily& streams, Exec exec) {
    if (k == 0) throw UsageError("levels start at 1");
    if (so_far.levels.size() < k - 1) throw UsageError("levels below k must be fixed before calibrating gamma_k");
    if (k == 1) return 0.0;
    const double tail = std::ldexp(1.0, -static_cast<int>(k) - 2);
    if (static_cast<double>(reps) * tail < 20.0)
        throw PrecisionError("too few replicates for the 1 - 2^-(k+2) quantile (need reps * 2^-(k+2) >= 20)");
    check_grid(so_far.theta_grid);
    const std::size_t depth = so_far.levels[k - 2].n;
    std::vector<double> sup(reps);
    parallel_for(reps, exec, [&](std::size_t r) {
        Stream s = streams.at(r);
        const auto back = draw_past(so_far.innovation, depth, s);
        double best = 0.0;
        for (double theta : so_far.theta_grid) {
            const auto z = zeta_prefix(back, theta);
            cplx sum = 0.0;
            for (std::size_t j = 0; j + 1 < k; ++j) {
                const auto& lv = so_far.levels[j];
                sum += lv.a * phase(lv.n, theta) * z[lv.n];
            }
            best = std::max(best, std::abs(sum));
        }
        sup[r] = best;
    });
    return empirical_quantile(sup, 1.0 - tail);
}

BlockCalibration calibrate_block(const CounterexampleSpec& so_far, std::size_t k, double gamma_k,
                                 std::size_t reps, const StreamFamily& streams, Exec exec) {
    if (k == 0) throw UsageError("levels start at 1");
    if (so_far.levels.size() < k - 1) throw UsageError("level k-1 must be fixed before calibrating n_k");
    if (reps == 0) throw UsageError("reps must be at least 1");
    if (!(so_far.tau > 0.0 && so_far.tau <= 1.0)) throw UsageError("threshold multiplier tau must lie in (0, 1]");
    check_grid(so_far.theta_grid);
    const std::size_t n_prev = so_far.previous_n(k);
    if (so_far.n_max <= n_prev) throw UsageError("n_max must exceed n_{k-1}");

    BlockCalibration out;
    const double a_k = coefficient_rule(k, n_prev);
    out.threshold = so_far.tau * (gamma_k + std::ldexp(1.0, static_cast<int>(k) + 1)) / a_k;
    out.target = 1.0 - std::ldexp(1.0, -static_cast<int>(k) - 1);
    const double c2 = out.threshold * out.threshold;
    const std::size_t G = so_far.theta_grid.size();

    // Per replicate: one innovation stream shared by every grid frequency, and
    // per-frequency walk state extended as the search window grows.
    struct Walker {
        Stream stream;
        std::vector<cplx> w;
        std::vector<Rotor> rot;
        std::vector<char> hit;
        std::vector<double> y;
    };
    std::vector<Walker> walkers;
    walkers.reserve(reps);
    for (std::size_t r = 0; r < reps; ++r) {
        Walker wk{streams.at(r), std::vector<cplx>(G, 0.0), {}, std::vector<char>(G, 0), {}};
        for (double t : so_far.theta_grid) wk.rot.emplace_back(t);
        walkers.push_back(std::move(wk));
    }

    std::size_t reached = 0;  // walks hold W_reached
    auto extend_to = [&](std::size_t N) {
        const std::size_t from = reached;
        parallel_for(reps, exec, [&](std::size_t r) {
            Walker& wk = walkers[r];
            wk.y.resize(N - from);
            for (auto& v : wk.y) v = draw_innovation(so_far.innovation, wk.stream);
            for (std::size_t g = 0; g < G; ++g) {
                if (wk.hit[g]) continue;
                cplx w = wk.w[g];
                Rotor& rot = wk.rot[g];
                for (std::size_t l = from; l < N; ++l) {
                    w += wk.y[l - from] * rot.value();
                    rot.advance();
                    const std::size_t n = l + 1;
                    if (n > n_prev && std::norm(w) >= c2 * static_cast<double>(n)) {
                        wk.hit[g] = 1;
                        break;
                    }
                }
                wk.w[g] = w;
            }
        });
        reached = N;
    };
    auto probability = [&] {
        double worst = 1.0;
        for (std::size_t g = 0; g < G; ++g) {
            std::size_t count = 0;
            for (const auto& wk : walkers) count += wk.hit[g] ? 1 : 0;
            worst = std::min(worst, static_cast<double>(count) / static_cast<double>(reps));
        }
        return worst;
    };

    for (std::size_t step = 1;; step *= 2) {
        const std::size_t N = std::min(n_prev + step, so_far.n_max);
        extend_to(N);
        const double p = probability();
        out.search_n.push_back(N);
        out.search_p.push_back(p);
        if (p >= out.target) {
            out.n = N;
            return out;
        }
        if (N == so_far.n_max)
            throw CalibrationInfeasibleError(
                "block " + std::to_string(k) + " calibration reached n_max = " + std::to_string(N) +
                    " with exceedance probability " + std::to_string(p) + " < target " + std::to_string(out.target),
                k, N, p, out.target);
    }
}

CounterexampleSpec build_spec(std::size_t K, double tau, std::vector<double> theta_grid, std::size_t reps,
                              std::size_t n_max, const StreamFamily& streams, Exec exec) {
    if (K == 0) throw UsageError("K must be at least 1");
    CounterexampleSpec spec;
    spec.tau = tau;
    spec.n_max = n_max;
    spec.reps = reps;
    spec.theta_grid = theta_grid.empty() ? default_theta_grid() : std::move(theta_grid);
    for (std::size_t k = 1; k <= K; ++k) {
        const double gamma = calibrate_gamma(spec, k, reps, streams.sub(static_cast<std::uint32_t>(2 * k)), exec);
        const BlockCalibration blk =
            calibrate_block(spec, k, gamma, reps, streams.sub(static_cast<std::uint32_t>(2 * k + 1)), exec);
        CounterexampleLevel lv;
        lv.k = k;
        lv.n = blk.n;
        lv.a = coefficient_rule(k, spec.previous_n(k));
        lv.gamma = gamma;
        lv.threshold = blk.threshold;
        lv.target_probability = blk.target;
        lv.achieved_probability = blk.search_p.back();
        spec.levels.push_back(lv);
    }
    return spec;
}

// ============================================================================
// Probes
// ============================================================================

namespace {

// Decomposition of E_0 S_n into lower levels, level k and higher levels.
struct BlockParts {
    cplx prior;
    std::vector<cplx> phases;
};

BlockParts block_parts(const CounterexampleSpec& spec, std::size_t k, double theta, const std::vector<cplx>& z) {
    BlockParts p;
    p.prior = 0.0;
    for (const auto& lv : spec.levels) p.phases.push_back(lv.a * phase(lv.n, theta));
    for (std::size_t j = 0; j + 1 < k; ++j) p.prior += p.phases[j] * z[spec.levels[j].n];
    return p;
}

// Level j contribution to E_0 S_n: a e^{i n_j theta} (zeta_{-n_j} - zeta_{-(n_j - n)}).
cplx level_term(const CounterexampleSpec& spec, const BlockParts& parts, const std::vector<cplx>& z, std::size_t j,
                std::size_t n) {
    const std::size_t nj = spec.levels[j].n;
    const cplx older = n <= nj ? z[nj - n] : cplx(0.0);
    return parts.phases[j] * (z[nj] - older);
}

}  // namespace

BlockInequality verify_block_inequality(const CounterexampleSpec& spec, std::size_t k, Frequency theta,
                                        std::size_t reps, const StreamFamily& streams, Exec exec) {
    check_level(spec, k);
    if (reps == 0) throw UsageError("reps must be at least 1");
    const double t = theta.radians();
    const std::size_t n_prev = spec.previous_n(k), n_k = spec.levels[k - 1].n;
    const double lhs_level = std::ldexp(1.0, static_cast<int>(k));
    const double main_level = spec.levels[k - 1].gamma + std::ldexp(1.0, static_cast<int>(k) + 1);
    const double gamma = spec.levels[k - 1].gamma;
    std::vector<char> lhs(reps), main(reps), residual(reps), prior(reps);
    parallel_for(reps, exec, [&](std::size_t r) {
        Stream s = streams.at(r);
        const auto back = draw_past(spec.innovation, spec.depth(), s);
        const auto z = zeta_prefix(back, t);
        const BlockParts parts = block_parts(spec, k, t, z);
        double m_lhs = 0.0, m_main = 0.0, m_res = 0.0;
        for (std::size_t n = n_prev + 1; n <= n_k; ++n) {
            const double root = std::sqrt(static_cast<double>(n));
            const cplx mid = level_term(spec, parts, z, k - 1, n);
            cplx higher = 0.0;
            for (std::size_t j = k; j < spec.levels.size(); ++j) higher += level_term(spec, parts, z, j, n);
            m_lhs = std::max(m_lhs, std::abs(parts.prior + mid + higher) / root);
            m_main = std::max(m_main, std::abs(mid) / root);
            m_res = std::max(m_res, std::abs(higher) / root);
        }
        lhs[r] = m_lhs >= lhs_level;
        main[r] = m_main >= main_level;
        residual[r] = m_res >= lhs_level;
        prior[r] = std::abs(parts.prior) > gamma;
    });
    BlockInequality out;
    const auto pl = proportion(lhs), pm = proportion(main), pr = proportion(residual), pp = proportion(prior);
    out.p_lhs = pl.p;
    out.p_main = pm.p;
    out.p_residual = pr.p;
    out.p_prior = pp.p;
    out.se_lhs = pl.std_error;
    out.se_main = pm.std_error;
    out.se_residual = pr.std_error;
    out.rhs = out.p_main - out.p_residual - std::ldexp(1.0, -static_cast<int>(k) - 2);
    const double se = std::sqrt(pl.std_error * pl.std_error + pm.std_error * pm.std_error +
                                pr.std_error * pr.std_error);
    out.holds = out.p_lhs >= out.rhs - 3.0 * se;
    return out;
}

std::vector<ProbabilityEstimate> divergence_probe(const CounterexampleSpec& spec, Frequency theta,
                                                  std::size_t reps, const StreamFamily& streams, Exec exec,
                                                  std::optional<double> tau) {
    if (spec.levels.empty()) return {};
    check_level(spec, 1);
    if (reps == 0) throw UsageError("reps must be at least 1");
    const double t = theta.radians();
    const double scale = tau ? *tau : spec.tau;
    const std::size_t K = spec.levels.size();
    std::vector<std::vector<char>> hits(K, std::vector<char>(reps, 0));
    parallel_for(reps, exec, [&](std::size_t r) {
        Stream s = streams.at(r);
        const auto back = draw_past(spec.innovation, spec.depth(), s);
        const auto z = zeta_prefix(back, t);
        const BlockParts parts = block_parts(spec, 1, t, z);
        std::size_t level = 0;
        double best = 0.0;
        for (std::size_t n = spec.n0 + 1; n <= spec.depth(); ++n) {
            cplx e0 = 0.0;
            for (std::size_t j = 0; j < K; ++j) e0 += level_term(spec, parts, z, j, n);
            best = std::max(best, std::abs(e0) / std::sqrt(static_cast<double>(n)));
            if (n == spec.levels[level].n) {
                hits[level][r] = best >= scale * std::ldexp(1.0, static_cast<int>(level) + 1);
                best = 0.0;
                ++level;
            }
        }
    });
    std::vector<ProbabilityEstimate> out;
    for (const auto& h : hits) out.push_back(proportion(h));
    return out;
}

CenteringCheck centering_necessity(const CounterexampleSpec& spec, Frequency theta, std::size_t reps,
                                   const StreamFamily& streams, Exec exec, std::optional<std::size_t> n,
                                   std::size_t max_candidates) {
    check_level(spec, 1);
    const std::size_t len = n ? *n : spec.depth();
    if (len == 0) throw UsageError("block length must be at least 1");
    if (len > kMaxPastDepth) throw ResourceError("centering check length exceeds the memory budget");
    const ProcessModel model(spec.model());
    const double floor = spec.tau * std::ldexp(1.0, static_cast<int>(spec.levels.size()));
    const StreamFamily pasts = streams.sub(1);
    for (std::size_t c = 0; c < max_candidates; ++c) {
        Stream s = pasts.at(c);
        const FrozenPast past = freeze_past(model, s);
        const cplx shift = cond_exp_dft(model, past, len, theta) / std::sqrt(static_cast<double>(len));
        if (std::abs(shift) < floor) continue;
        CenteringCheck out;
        out.n = len;
        out.past_index = c;
        out.shift = shift;
        out.shift_floor = floor;
        LabOptions opt;
        opt.exec = exec;
        const StreamFamily runs = streams.sub(2);
        out.uncentered = run_clt(model, theta, len, reps, SamplingMode::Quenched, Centering::None, past, runs, opt);
        out.centered =
            run_clt(model, theta, len, reps, SamplingMode::Quenched, Centering::Conditional, past, runs, opt);
        out.demonstrated = !out.uncentered.report.pass && out.centered.report.pass;
        return out;
    }
    throw CalibrationInfeasibleError("no frozen past among the candidates reaches the block threshold",
                                     spec.levels.size(), len, 0.0, floor);
}

}  // namespace quench
