#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "internal.hpp"
#include "quench/cli.hpp"
#include "quench/errors.hpp"
#include "quench/model_io.hpp"

namespace quench::cli {

namespace {

constexpr double kHalfPi = std::numbers::pi / 2.0;
constexpr double kBig = 1e12;

ParamSpec real(std::string name, json fallback, double lo, double hi, std::string help) {
    return {std::move(name), ParamKind::Real, std::move(fallback), lo, hi, {}, std::move(help)};
}
ParamSpec count(std::string name, json fallback, double lo, double hi, std::string help) {
    return {std::move(name), ParamKind::Count, std::move(fallback), lo, hi, {}, std::move(help)};
}
ParamSpec choice(std::string name, std::string fallback, std::vector<std::string> choices, std::string help) {
    return {std::move(name), ParamKind::Text, fallback, 0, 0, std::move(choices), std::move(help)};
}
ParamSpec theta(double fallback) { return real("theta", fallback, -kBig, kBig, "frequency in radians"); }
ParamSpec thresholds_ks() { return real("ks_threshold", nullptr, 0.0, 1.0, "KS threshold (default 1.5*1.358/sqrt(reps))"); }
ParamSpec thresholds_corr() { return real("corr_threshold", nullptr, 0.0, 1.0, "correlation threshold (default 3.5/sqrt(reps))"); }

std::vector<CommandSpec> build_commands() {
    return {
        {"simulate", 1, true, "sample a trajectory",
         {count("n", 16, 1, kBig, "trajectory length"),
          choice("mode", "annealed", {"annealed", "quenched"}, "stationary path or path under a frozen past")}},
        {"dft", 2, false, "discrete Fourier transform of a sampled or given series",
         {theta(0.0), count("n", nullptr, 1, kBig, "number of terms (default 16, or all input rows)"),
          {"input", ParamKind::Text, nullptr, 0, 0, {}, "CSV with columns re[,im] instead of a model path"}}},
        {"spectral", 3, true, "spectral density: exact, variance estimator or Cesaro mean",
         {{"theta", ParamKind::RealList, json::array({kHalfPi}), -kBig, kBig, {}, "comma-separated frequencies"},
          choice("method", "exact", {"exact", "variance", "cesaro"}, "estimator"),
          count("n", 1024, 1, kBig, "DFT length / Cesaro order"), count("reps", 200, 1, kBig, "replicates"),
          count("lags", 0, 0, kBig, "autocovariance half width for Cesaro (0: n)")}},
        {"quenched-clt", 4, true, "quenched or annealed CLT test of the normalized DFT",
         {theta(kHalfPi), count("n", 4096, 1, kBig, "DFT length"), count("reps", 2000, 2, kBig, "replicates"),
          choice("mode", "quenched", {"annealed", "quenched"}, "sampling mode"),
          choice("center", "conditional", {"none", "conditional"}, "centering"), thresholds_ks(), thresholds_corr()}},
        {"mart-approx", 5, true, "martingale approximation error under a frozen past",
         {theta(kHalfPi), count("r", 20, 0, kBig, "truncation order"), count("n", 4096, 1, kBig, "DFT length"),
          count("reps", 1000, 1, kBig, "replicates")}},
        {"invariance", 6, true, "finite-dimensional test of the centered DFT path",
         {theta(kHalfPi), count("n", 4096, 1, kBig, "DFT length"), count("reps", 2000, 2, kBig, "replicates"),
          {"times", ParamKind::RealList, json::array({0.25, 0.5, 1.0}), 0.0, 1.0, {}, "comma-separated times in (0,1]"},
          thresholds_ks(), thresholds_corr()}},
        {"averaged", 7, true, "invariance test at uniformly drawn frequencies",
         {count("n", 4096, 1, kBig, "DFT length"), count("reps", 2000, 2, kBig, "replicates"), thresholds_ks(),
          thresholds_corr()}},
        {"conditions", 8, true, "Hannan, weak Hannan, Maxwell-Woodroofe and ratio conditions",
         {theta(kHalfPi), count("K", 60, 1, 1e7, "horizon")}},
        {"counterexample", 9, false, "calibrate and probe the sparse linear counterexample",
         {count("K", 2, 1, 30, "number of levels"), real("tau", 0.25, 1e-12, 1.0, "threshold multiplier in (0,1]"),
          count("reps", 1000, 1, kBig, "calibration replicates"), count("n_max", 100000, 2, 5e7, "block length cap"),
          count("probe_reps", 1000, 1, kBig, "probe replicates"), theta(1.0),
          {"symmetric", ParamKind::Boolean, true, 0, 0, {}, "include 0 and pi in the calibration grid"},
          {"spec", ParamKind::Text, nullptr, 0, 0, {}, "load a calibrated spec instead of calibrating"}}},
    };
}

void check_param(const ParamSpec& p, const json& v) {
    const std::string where = "parameter '" + p.name + "'";
    auto range = [&](double x) {
        if (!std::isfinite(x)) throw UsageError(where + " must be finite");
        if (p.lo < p.hi && (x < p.lo || x > p.hi))
            throw UsageError(where + " = " + fmt(x) + " outside [" + fmt(p.lo) + ", " + fmt(p.hi) + "]");
    };
    switch (p.kind) {
        case ParamKind::Real:
            if (!v.is_number()) throw UsageError(where + " must be a number");
            range(v.get<double>());
            break;
        case ParamKind::Count:
            if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
                throw UsageError(where + " must be a non-negative integer");
            range(static_cast<double>(v.get<std::uint64_t>()));
            break;
        case ParamKind::Text:
            if (!v.is_string()) throw UsageError(where + " must be a string");
            if (!p.choices.empty() &&
                std::find(p.choices.begin(), p.choices.end(), v.get<std::string>()) == p.choices.end())
                throw UsageError(where + " must be one of the documented choices");
            break;
        case ParamKind::RealList:
            if (!v.is_array() || v.empty()) throw UsageError(where + " must be a non-empty list of numbers");
            for (const auto& e : v) {
                if (!e.is_number()) throw UsageError(where + " must be a list of numbers");
                range(e.get<double>());
            }
            break;
        case ParamKind::Boolean:
            if (!v.is_boolean()) throw UsageError(where + " must be true or false");
            break;
    }
}

std::string flag_name(const std::string& name) {
    std::string f = name;
    std::replace(f.begin(), f.end(), '_', '-');
    return "--" + f;
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw UsageError(path + ": " + e.what());
    }
}

unsigned threads_from_env() {
    if (const char* env = std::getenv("QUENCH_DFT_THREADS")) {
        unsigned v = 0;
        const auto res = std::from_chars(env, env + std::strlen(env), v);
        if (res.ec != std::errc() || v == 0) throw UsageError("QUENCH_DFT_THREADS must be a positive integer");
        return v;
    }
    return 1;
}

}  // namespace

const std::vector<CommandSpec>& commands() {
    static const std::vector<CommandSpec> table = build_commands();
    return table;
}

const CommandSpec& command(const std::string& name) {
    for (const auto& c : commands())
        if (c.name == name) return c;
    throw UsageError("unknown command '" + name + "'");
}

json parse_flag_value(const ParamSpec& p, const std::string& text) {
    auto number = [&](std::string_view s) {
        double v = 0.0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc() || res.ptr != s.data() + s.size())
            throw UsageError(flag_name(p.name) + ": '" + std::string(s) + "' is not a number");
        return v;
    };
    switch (p.kind) {
        case ParamKind::Real: return number(text);
        case ParamKind::Count: {
            std::uint64_t v = 0;
            const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
            if (res.ec != std::errc() || res.ptr != text.data() + text.size())
                throw UsageError(flag_name(p.name) + ": '" + text + "' is not a non-negative integer");
            return v;
        }
        case ParamKind::Text: return text;
        case ParamKind::Boolean:
            if (text == "true" || text == "1") return true;
            if (text == "false" || text == "0") return false;
            throw UsageError(flag_name(p.name) + " expects true or false");
        case ParamKind::RealList: {
            json out = json::array();
            std::string_view rest = text;
            while (true) {
                const auto comma = rest.find(',');
                out.push_back(number(rest.substr(0, comma)));
                if (comma == std::string_view::npos) break;
                rest.remove_prefix(comma + 1);
            }
            return out;
        }
    }
    return nullptr;
}

void CsvWriter::row(const std::vector<std::string>& cells) { rows_.push_back(cells); }

std::string CsvWriter::str() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += cells[i];
        }
        out += '\n';
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return out;
}

json validate_config(const json& config) {
    static const std::set<std::string> top = {"command", "model", "parameters", "seed", "output"};
    if (!config.is_object()) throw UsageError("config must be a JSON object");
    for (const auto& [key, _] : config.items())
        if (!top.count(key)) throw UsageError("config: unknown key '" + key + "'");
    if (!config.contains("command") || !config["command"].is_string()) throw UsageError("config: missing command");
    const CommandSpec& cmd = command(config["command"].get<std::string>());

    json out;
    out["command"] = cmd.name;
    const json seed = config.value("seed", json(0));
    if (!seed.is_number_integer() || (!seed.is_number_unsigned() && seed.get<std::int64_t>() < 0)) throw UsageError("config: seed must be a non-negative integer");
    out["seed"] = seed;
    out["output"] = config.value("output", cmd.name);
    if (!out["output"].is_string()) throw UsageError("config: output must be a path prefix string");

    if (config.contains("model") && !config["model"].is_null()) {
        try {
            out["model"] = model_to_json(model_from_json(config["model"]));
        } catch (const ModelValidationError& e) {
            throw UsageError(std::string("config: invalid model: ") + e.what());
        }
    } else if (cmd.needs_model) {
        throw UsageError("command '" + cmd.name + "' needs a model (--model file.json)");
    }

    const json given = config.value("parameters", json::object());
    if (!given.is_object()) throw UsageError("config: parameters must be an object");
    json params = json::object();
    for (const auto& [key, value] : given.items()) {
        const auto it = std::find_if(cmd.params.begin(), cmd.params.end(), [&](const ParamSpec& p) { return p.name == key; });
        if (it == cmd.params.end()) throw UsageError("command '" + cmd.name + "': unknown parameter '" + key + "'");
        if (value.is_null()) continue;
        check_param(*it, value);
        params[key] = value;
    }
    for (const auto& p : cmd.params)
        if (!params.contains(p.name) && !p.fallback.is_null()) params[p.name] = p.fallback;
    out["parameters"] = params;
    return out;
}

int run(const json& config, Exec exec) {
    const json cfg = validate_config(config);
    const CommandSpec& cmd = command(cfg["command"].get<std::string>());
    Context ctx{cfg, cfg["parameters"], std::nullopt,
                StreamFamily(cfg["seed"].get<std::uint64_t>(), cmd.id), exec};
    if (cfg.contains("model")) ctx.model.emplace(model_from_json(cfg["model"]));
    Outcome outcome = run_command(cmd.name, ctx);

    json summary;
    summary["version"] = kVersion;
    summary["command"] = cmd.name;
    summary["config"] = cfg;
    summary["seed"] = cfg["seed"];
    summary["verdict"] = outcome.verdict;
    summary["results"] = outcome.results;
    summary["oracle"] = outcome.oracle;

    const std::string prefix = cfg["output"].get<std::string>();
    {
        std::ofstream csv(prefix + ".csv", std::ios::binary);
        if (!csv) throw UsageError("cannot write " + prefix + ".csv");
        csv << outcome.csv.str();
    }
    {
        std::ofstream js(prefix + ".json", std::ios::binary);
        if (!js) throw UsageError("cannot write " + prefix + ".json");
        js << summary.dump(2) << '\n';
    }
    std::cout << cmd.name << ": " << outcome.verdict << " (" << prefix << ".csv, " << prefix << ".json)\n";
    return outcome.verdict == "fail" ? kStatisticalFail : kSuccess;
}

int main(int argc, char** argv) {
    CLI::App app{"Quenched limit theorems for discrete Fourier transforms: simulation and verification"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    std::string model_path, config_path, replay_path, out_prefix;
    std::optional<unsigned> threads;
    std::optional<std::uint64_t> seed;
    app.add_option("--model", model_path, "model specification (JSON)");
    app.add_option("--config", config_path, "experiment config (JSON)");
    app.add_option("--replay", replay_path, "re-run the config embedded in a JSON summary");
    app.add_option("--threads", threads, "worker threads (default: QUENCH_DFT_THREADS or 1)")->check(CLI::PositiveNumber);
    app.add_option("--seed", seed, "64-bit seed");
    app.add_option("--out", out_prefix, "output path prefix for <prefix>.csv and <prefix>.json");

    std::map<std::string, std::map<std::string, std::string>> raw;
    for (const auto& c : commands()) {
        CLI::App* sub = app.add_subcommand(c.name, c.help);
        sub->fallthrough();
        for (const auto& p : c.params) sub->add_option(flag_name(p.name), raw[c.name][p.name], p.help);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kSuccess : kUsageError;
    }

    try {
        const CLI::App* chosen = app.get_subcommands().front();
        const CommandSpec& cmd = command(chosen->get_name());

        json config = json::object();
        if (!replay_path.empty()) {
            const json summary = read_json_file(replay_path);
            if (!summary.contains("config")) throw UsageError(replay_path + ": no embedded config");
            config = summary["config"];
        } else if (!config_path.empty()) {
            config = read_json_file(config_path);
        }
        if (config.contains("command") && config["command"] != cmd.name)
            throw UsageError("config is for command '" + config["command"].get<std::string>() + "', not '" + cmd.name + "'");
        config["command"] = cmd.name;
        if (!model_path.empty()) config["model"] = read_json_file(model_path);
        if (seed) config["seed"] = *seed;
        if (!out_prefix.empty()) config["output"] = out_prefix;
        if (!config.contains("parameters")) config["parameters"] = json::object();
        for (const auto& p : cmd.params) {
            const CLI::Option* opt = chosen->get_option(flag_name(p.name));
            if (opt->count() > 0) config["parameters"][p.name] = parse_flag_value(p, raw[cmd.name][p.name]);
        }
        const Exec exec{threads ? *threads : threads_from_env()};
        return run(config, exec);
    } catch (const CalibrationInfeasibleError& e) {
        std::cerr << "quench-dft: " << e.what() << '\n';
        return kStatisticalFail;
    } catch (const Error& e) {
        std::cerr << "quench-dft: error: " << e.what() << '\n';
        return kUsageError;
    } catch (const std::exception& e) {
        std::cerr << "quench-dft: error: " << e.what() << '\n';
        return kUsageError;
    }
}

}  // namespace quench::cli
