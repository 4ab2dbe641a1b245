#include <cmath>
#include <sstream>

#include "internal.hpp"
#include "quench/counterexample.hpp"
#include "quench/errors.hpp"
#include "quench/fourier.hpp"
#include "quench/martingale.hpp"
#include "quench/quenched_lab.hpp"
#include "quench/spectral.hpp"

namespace quench::cli {

namespace {

std::size_t count_param(const Context& c, const char* key) { return c.params.at(key).get<std::size_t>(); }
double real_param(const Context& c, const char* key) { return c.params.at(key).get<double>(); }
std::string text_param(const Context& c, const char* key) { return c.params.at(key).get<std::string>(); }

const ProcessModel& model_of(const Context& c) {
    if (!c.model) throw UsageError("this command needs a model (--model file.json)");
    return *c.model;
}

FrozenPast frozen_past(const Context& c) {
    Stream s = c.streams.sub(1).at(0);
    return freeze_past(model_of(c), s);
}

LabOptions lab_options(const Context& c, std::size_t reps) {
    LabOptions opt;
    opt.exec = c.exec;
    if (c.params.contains("ks_threshold") || c.params.contains("corr_threshold")) {
        Thresholds t = Thresholds::defaults(reps);
        if (c.params.contains("ks_threshold")) t.ks = real_param(c, "ks_threshold");
        if (c.params.contains("corr_threshold")) t.corr = real_param(c, "corr_threshold");
        opt.thresholds = t;
    }
    return opt;
}

json cplx_json(cplx z) { return json::array({z.real(), z.imag()}); }

json report_json(const TestReport& r) {
    json j = {{"ks_re", r.ks_re},
              {"ks_im", r.ks_im},
              {"corr_re_im", r.corr_re_im},
              {"threshold_ks", r.threshold_ks},
              {"threshold_corr", r.threshold_corr},
              {"pass", r.pass}};
    if (!r.components.empty()) {
        j["components"] = json::array();
        for (const auto& sub : r.components) j["components"].push_back(report_json(sub));
    }
    return j;
}

json series_json(const SeriesReport& s) {
    return {{"sum", s.partial_sums.empty() ? 0.0 : s.partial_sums.back()},
            {"verdict", verdict_name(s.verdict)},
            {"tail", std::isfinite(s.tail) ? json(s.tail) : json(nullptr)},
            {"divergence_hint", s.divergence_hint}};
}

// ============================================================================
// Commands
// ============================================================================

Outcome simulate(Context& c) {
    const ProcessModel& model = model_of(c);
    const std::size_t n = count_param(c, "n");
    const bool quenched = text_param(c, "mode") == "quenched";
    Stream s = c.streams.sub(2).at(0);
    const Trajectory traj = quenched ? sample_quenched_path(model, frozen_past(c), n, s) : sample_path(model, n, s);
    Outcome out;
    out.csv = CsvWriter({"k", "re", "im"});
    for (std::size_t k = 0; k < n; ++k) out.csv.row({fmt(k), fmt(traj.values[k].real()), fmt(traj.values[k].imag())});
    out.results = {{"n", n}, {"mode", quenched ? "quenched" : "annealed"}};
    out.oracle = {{"mean", cplx_json(model.mean())}};
    return out;
}

std::vector<cplx> read_series_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read " + path);
    std::string line;
    if (!std::getline(in, line)) throw UsageError(path + ": empty file");
    std::vector<cplx> values;
    auto parse = [&](const std::string& cell) {
        double v = 0.0;
        const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
            throw UsageError(path + ": '" + cell + "' is not a number");
        return v;
    };
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
        if (cells.empty() || cells.size() > 2) throw UsageError(path + ": row " + std::to_string(row) + " needs re[,im]");
        values.emplace_back(parse(cells[0]), cells.size() == 2 ? parse(cells[1]) : 0.0);
    }
    if (values.empty()) throw UsageError(path + ": no data rows");
    return values;
}

Outcome dft_command(Context& c) {
    const Frequency theta(real_param(c, "theta"));
    std::vector<cplx> values;
    if (c.params.contains("input")) {
        values = read_series_csv(text_param(c, "input"));
        if (c.params.contains("n")) {
            const std::size_t n = count_param(c, "n");
            if (n > values.size()) throw UsageError("--n exceeds the number of input rows");
            values.resize(n);
        }
    } else {
        const std::size_t n = c.params.contains("n") ? count_param(c, "n") : 16;
        Stream s = c.streams.sub(2).at(0);
        values = sample_path(model_of(c), n, s).values;
    }
    const auto sums = partial_dfts(values, theta);
    Outcome out;
    out.csv = CsvWriter({"k", "x_re", "x_im", "s_re", "s_im"});
    for (std::size_t k = 0; k < values.size(); ++k)
        out.csv.row({fmt(k + 1), fmt(values[k].real()), fmt(values[k].imag()), fmt(sums[k].real()), fmt(sums[k].imag())});
    const cplx s = sums.back();
    out.results = {{"n", values.size()},
                   {"theta", theta.radians()},
                   {"s", cplx_json(s)},
                   {"periodogram", std::norm(s) / static_cast<double>(values.size())}};
    return out;
}

Outcome spectral(Context& c) {
    const ProcessModel& model = model_of(c);
    const std::string method = text_param(c, "method");
    const std::size_t n = count_param(c, "n"), reps = count_param(c, "reps");
    const std::size_t lags = count_param(c, "lags") == 0 ? n : count_param(c, "lags");
    std::optional<DensityEvaluator> density;
    try {
        density.emplace(model);
    } catch (const PrecisionError&) {
        if (method == "exact") throw;
    }
    std::optional<TwoSidedSequence> gamma;
    if (method != "exact") gamma = exact_autocov_window(model, std::max(lags, n));

    Outcome out;
    out.csv = CsvWriter({"theta", "method", "n", "reps", "estimate", "std_error", "exact", "expected"});
    json rows = json::array();
    bool all_pass = true;
    for (const auto& t : c.params.at("theta")) {
        const Frequency theta(t.get<double>());
        SpectralEstimate est;
        std::optional<double> expected;
        if (method == "exact") {
            est = {theta, (*density)(theta), SpectralMethod::Exact, 0, 0, 0.0};
        } else if (method == "cesaro") {
            est = density_cesaro(*gamma, theta, n);
        } else {
            est = density_variance_est(model, theta, n, reps, c.streams.sub(2), c.exec);
            expected = density_cesaro(*gamma, theta, n).estimate;
            all_pass = all_pass && std::abs(est.estimate - *expected) <= 4.0 * est.std_error + 1e-12;
        }
        const double exact = density ? (*density)(theta) : 0.0;
        out.csv.row({fmt(theta.radians()), method_name(est.method), fmt(est.n), fmt(est.reps), fmt(est.estimate),
                     fmt(est.std_error), density ? fmt(exact) : "", expected ? fmt(*expected) : ""});
        rows.push_back({{"theta", theta.radians()},
                        {"estimate", est.estimate},
                        {"std_error", est.std_error},
                        {"exact", density ? json(exact) : json(nullptr)},
                        {"expected", expected ? json(*expected) : json(nullptr)}});
    }
    out.results = {{"method", method}, {"estimates", rows}};
    if (method == "variance") {
        out.verdict = all_pass ? "pass" : "fail";
        out.oracle = {{"rule", "|estimate - (1/n) E|S_n|^2| <= 4 std_error"}};
    }
    if (density) out.oracle["subdominant_modulus"] = density->subdominant();
    return out;
}

Outcome quenched_clt(Context& c) {
    const ProcessModel& model = model_of(c);
    const Frequency theta(real_param(c, "theta"));
    const std::size_t n = count_param(c, "n"), reps = count_param(c, "reps");
    const SamplingMode mode = text_param(c, "mode") == "quenched" ? SamplingMode::Quenched : SamplingMode::Annealed;
    const Centering center = text_param(c, "center") == "conditional" ? Centering::Conditional : Centering::None;
    std::optional<FrozenPast> past;
    if (mode == SamplingMode::Quenched) past = frozen_past(c);
    const CltRun run = run_clt(model, theta, n, reps, mode, center, past, c.streams.sub(2), lab_options(c, reps));

    Outcome out;
    out.csv = CsvWriter({"replicate", "re", "im"});
    for (std::size_t i = 0; i < reps; ++i)
        out.csv.row({fmt(i), fmt(run.sample.values[i].real()), fmt(run.sample.values[i].imag())});
    out.results = {{"report", report_json(run.report)}, {"mode", mode_name(mode)}, {"center", centering_name(center)}};
    if (past)
        out.results["shift"] = cplx_json(cond_exp_dft(model, *past, n, theta) / std::sqrt(static_cast<double>(n)));
    out.oracle = {{"sigma2_oracle", run.sigma2}};
    out.verdict = run.report.pass ? "pass" : "fail";
    return out;
}

Outcome mart_approx(Context& c) {
    const ProcessModel& model = model_of(c);
    const Frequency theta(real_param(c, "theta"));
    const std::size_t r = count_param(c, "r"), n = count_param(c, "n"), reps = count_param(c, "reps");
    const FrozenPast past = frozen_past(c);
    const ApproxError err = approx_error(model, past, theta, r, n, reps, c.streams.sub(2), c.exec);
    const MartApprox d = d_r0(model, r, theta);
    Outcome out;
    out.csv = CsvWriter({"r", "n", "reps", "mean_sq", "max_sq", "std_error", "max_std_error", "d_norm_sq"});
    out.csv.row({fmt(r), fmt(n), fmt(reps), fmt(err.mean_sq), fmt(err.max_sq), fmt(err.std_error),
                 fmt(err.max_std_error), fmt(d.norm_sq)});
    out.results = {{"mean_sq", err.mean_sq},
                   {"max_sq", err.max_sq},
                   {"std_error", err.std_error},
                   {"max_std_error", err.max_std_error},
                   {"d_norm_sq", d.norm_sq}};
    if (d.tail_bound) out.results["d_tail_bound"] = *d.tail_bound;
    if (model.linear()) {
        const double exact = approx_error_exact(model, past, theta, r, n);
        out.oracle = {{"mean_sq", exact}, {"rule", "|mean_sq - oracle| <= 3 std_error"}};
        out.verdict = std::abs(err.mean_sq - exact) <= 3.0 * err.std_error + 1e-15 ? "pass" : "fail";
    }
    return out;
}

Outcome invariance(Context& c) {
    const ProcessModel& model = model_of(c);
    const Frequency theta(real_param(c, "theta"));
    const std::size_t n = count_param(c, "n"), reps = count_param(c, "reps");
    const auto times = c.params.at("times").get<std::vector<double>>();
    const InvarianceRun run =
        run_invariance(model, frozen_past(c), theta, n, reps, times, c.streams.sub(2), lab_options(c, reps));
    Outcome out;
    out.csv = CsvWriter({"replicate", "increment", "t_start", "t_end", "re", "im"});
    for (std::size_t i = 0; i < reps; ++i)
        for (std::size_t d = 0; d < run.increments.size(); ++d)
            out.csv.row({fmt(i), fmt(d), fmt(d == 0 ? 0.0 : times[d - 1]), fmt(times[d]),
                         fmt(run.increments[d][i].real()), fmt(run.increments[d][i].imag())});
    out.results = {{"report", report_json(run.report)}, {"lattice", run.lattice}};
    out.oracle = {{"sigma2_oracle", run.sigma2}};
    out.verdict = run.report.pass ? "pass" : "fail";
    return out;
}

Outcome averaged(Context& c) {
    const ProcessModel& model = model_of(c);
    const std::size_t n = count_param(c, "n"), reps = count_param(c, "reps");
    const AveragedRun run = averaged_frequency_run(model, frozen_past(c), n, reps, c.streams.sub(2), lab_options(c, reps));
    Outcome out;
    out.csv = CsvWriter({"replicate", "theta", "sigma2", "kept", "z_re", "z_im"});
    std::size_t next = 0;
    for (std::size_t i = 0; i < reps; ++i) {
        const bool kept = next < run.kept.size() && run.kept[next] == i;
        out.csv.row({fmt(i), fmt(run.thetas[i]), fmt(run.sigma2[i]), kept ? "1" : "0",
                     kept ? fmt(run.standardized[next].real()) : "", kept ? fmt(run.standardized[next].imag()) : ""});
        if (kept) ++next;
    }
    out.results = {{"report", report_json(run.report)}, {"dropped", run.dropped}};
    out.verdict = run.report.pass ? "pass" : "fail";
    return out;
}

Outcome conditions(Context& c) {
    const ProcessModel& model = model_of(c);
    const Frequency theta(real_param(c, "theta"));
    const std::size_t K = count_param(c, "K");
    const HannanReport h = condition_hannan(model, K);
    const MaxwellWoodroofeReport mw = condition_mw(model, theta, K);
    const SeriesReport ratio = condition_ratio(model, frozen_past(c), K);
    Outcome out;
    out.csv = CsvWriter({"condition", "index", "increment", "partial_sum"});
    auto emit = [&](const char* name, const SeriesReport& s, std::size_t first) {
        double prev = 0.0;
        for (std::size_t i = 0; i < s.partial_sums.size(); ++i) {
            out.csv.row({name, fmt(i + first), fmt(s.partial_sums[i] - prev), fmt(s.partial_sums[i])});
            prev = s.partial_sums[i];
        }
    };
    emit("hannan", h.hannan, 0);
    emit("weak_hannan", h.weak, 0);
    emit("maxwell_woodroofe", mw.series, 1);
    emit("ratio", ratio, 1);
    out.results = {{"hannan", series_json(h.hannan)},
                   {"weak_hannan", series_json(h.weak)},
                   {"maxwell_woodroofe", series_json(mw.series)},
                   {"ratio", series_json(ratio)},
                   {"mw_final_norm", mw.norms.back()}};
    return out;
}

Outcome counterexample(Context& c) {
    const Frequency theta(real_param(c, "theta"));
    const std::size_t probe_reps = count_param(c, "probe_reps");
    Outcome out;
    out.csv = CsvWriter({"level", "n", "a", "gamma", "threshold", "target_probability", "achieved_probability",
                         "probe_probability", "probe_std_error"});
    CounterexampleSpec spec;
    if (c.params.contains("spec")) {
        spec = load_spec(text_param(c, "spec"));
    } else {
        try {
            spec = build_spec(count_param(c, "K"), real_param(c, "tau"),
                              default_theta_grid(c.params.at("symmetric").get<bool>()), count_param(c, "reps"),
                              count_param(c, "n_max"), c.streams.sub(3), c.exec);
        } catch (const CalibrationInfeasibleError& e) {
            out.verdict = "fail";
            out.results = {{"calibration", "infeasible"},
                           {"message", e.what()},
                           {"level", e.level()},
                           {"n_reached", e.n_reached()},
                           {"achieved_probability", e.achieved_probability()},
                           {"target_probability", e.target_probability()}};
            return out;
        }
    }
    const auto probe = divergence_probe(spec, theta, probe_reps, c.streams.sub(4), c.exec);
    bool pass = true;
    json levels = json::array();
    for (std::size_t k = 0; k < spec.levels.size(); ++k) {
        const auto& lv = spec.levels[k];
        const bool ok = probe[k].p >= lv.target_probability - 3.0 * probe[k].std_error;
        pass = pass && ok;
        out.csv.row({fmt(lv.k), fmt(lv.n), fmt(lv.a), fmt(lv.gamma), fmt(lv.threshold), fmt(lv.target_probability),
                     fmt(lv.achieved_probability), fmt(probe[k].p), fmt(probe[k].std_error)});
        levels.push_back({{"k", lv.k}, {"probe_probability", probe[k].p}, {"probe_std_error", probe[k].std_error},
                          {"meets_target", ok}});
    }
    out.results = {{"calibration", c.params.contains("spec") ? "loaded" : "calibrated"},
                   {"spec", spec_to_json(spec)},
                   {"probe", levels}};
    out.oracle = {{"rule", "probe probability >= 1 - 2^-(k+1) - 3 std_error per level"}};
    out.verdict = pass ? "pass" : "fail";
    return out;
}

}  // namespace

Outcome run_command(const std::string& name, Context& ctx) {
    if (name == "simulate") return simulate(ctx);
    if (name == "dft") return dft_command(ctx);
    if (name == "spectral") return spectral(ctx);
    if (name == "quenched-clt") return quenched_clt(ctx);
    if (name == "mart-approx") return mart_approx(ctx);
    if (name == "invariance") return invariance(ctx);
    if (name == "averaged") return averaged(ctx);
    if (name == "conditions") return conditions(ctx);
    if (name == "counterexample") return counterexample(ctx);
    throw UsageError("unknown command '" + name + "'");
}

}  // namespace quench::cli
