#pragma once

#include <charconv>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "quench/models.hpp"
#include "quench/parallel.hpp"
#include "quench/rng.hpp"

namespace quench::cli {

using nlohmann::json;

enum class ParamKind { Real, Count, Text, RealList, Boolean };

struct ParamSpec {
    std::string name;  ///< JSON key; the flag is --name with '_' as '-'
    ParamKind kind;
    json fallback;     ///< null: optional without default
    double lo = 0.0;
    double hi = 0.0;   ///< range check when lo < hi
    std::vector<std::string> choices;
    std::string help;
};

struct CommandSpec {
    std::string name;
    std::uint32_t id;
    bool needs_model;
    std::string help;
    std::vector<ParamSpec> params;
};

const std::vector<CommandSpec>& commands();
const CommandSpec& command(const std::string& name);

/// Parses a flag value according to its kind.
json parse_flag_value(const ParamSpec& p, const std::string& text);

inline std::string fmt(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}
inline std::string fmt(std::size_t v) { return std::to_string(v); }

/// Header-first CSV writer with shortest round-trip numbers.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {}
    void row(const std::vector<std::string>& cells);
    std::string str() const;

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

struct Outcome {
    std::string verdict = "success";  ///< success | pass | fail
    json results = json::object();
    json oracle = json::object();
    CsvWriter csv{{}};
};

struct Context {
    const json& config;
    const json& params;
    std::optional<ProcessModel> model;
    StreamFamily streams;
    Exec exec;
};

Outcome run_command(const std::string& name, Context& ctx);

}  // namespace quench::cli
