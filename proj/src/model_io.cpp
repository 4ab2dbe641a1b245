#include "quench/model_io.hpp"

#include <fstream>
#include <set>
#include <string>

#include "quench/errors.hpp"

namespace quench {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [key, _] : j.items())
        if (!allowed.count(key)) throw ModelValidationError("unknown key '" + key + "' in " + where);
}

const json& field(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw ModelValidationError(std::string("missing field '") + key + "' in " + where);
    return j.at(key);
}

double number(const json& v, const std::string& what) {
    if (!v.is_number()) throw ModelValidationError(what + " must be a number");
    return v.get<double>();
}

std::vector<double> numbers(const json& v, const std::string& what) {
    if (!v.is_array()) throw ModelValidationError(what + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) out.push_back(number(x, what));
    return out;
}

std::size_t count(const json& v, const std::string& what) {
    if (!v.is_number_integer() || v.get<long long>() < 0)
        throw ModelValidationError(what + " must be a nonnegative integer");
    return v.get<std::size_t>();
}

cplx complex_value(const json& v) {
    if (v.is_number()) return {v.get<double>(), 0.0};
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
        return {v[0].get<double>(), v[1].get<double>()};
    throw ModelValidationError("complex observable entries must be numbers or [re, im] pairs");
}

}  // namespace

const char* innovation_name(InnovationKind kind) {
    switch (kind) {
        case InnovationKind::StandardNormal: return "StandardNormal";
        case InnovationKind::Rademacher: return "Rademacher";
        case InnovationKind::UniformSymmetric: return "UniformSymmetric";
    }
    return "StandardNormal";
}

InnovationKind innovation_from_name(const std::string& name) {
    if (name == "StandardNormal" || name == "normal") return InnovationKind::StandardNormal;
    if (name == "Rademacher" || name == "rademacher") return InnovationKind::Rademacher;
    if (name == "UniformSymmetric" || name == "uniform") return InnovationKind::UniformSymmetric;
    throw ModelValidationError("unknown innovation distribution '" + name + "'");
}

ProcessModel model_from_json(const json& j) {
    if (!j.is_object()) throw ModelValidationError("model specification must be a JSON object");
    const auto& variant = field(j, "variant", "model");
    if (!variant.is_string()) throw ModelValidationError("variant must be a string");
    const std::string name = variant.get<std::string>();

    if (name == "LinearAdaptedModel") {
        reject_unknown(j, {"variant", "coeffs", "tail", "innovation", "truncation_eps", "first_index"},
                       "LinearAdaptedModel");
        std::vector<double> coeffs = j.contains("coeffs") ? numbers(j.at("coeffs"), "coeffs") : std::vector<double>{};
        if (j.contains("first_index")) {
            const auto& fi = j.at("first_index");
            if (!fi.is_number_integer()) throw ModelValidationError("first_index must be an integer");
            const long long first = fi.get<long long>();
            if (first < 0)
                throw ModelValidationError("negative-index coefficients make the process non-adapted");
            coeffs.insert(coeffs.begin(), static_cast<std::size_t>(first), 0.0);
        }
        std::optional<GeometricTail> tail;
        if (j.contains("tail")) {
            const auto& t = j.at("tail");
            if (!t.is_object()) throw ModelValidationError("tail must be an object {rho, scale}");
            reject_unknown(t, {"rho", "scale"}, "tail");
            tail = GeometricTail{number(field(t, "rho", "tail"), "tail.rho"),
                                 t.contains("scale") ? number(t.at("scale"), "tail.scale") : 1.0};
        }
        InnovationKind innovation = InnovationKind::StandardNormal;
        if (j.contains("innovation")) {
            if (!j.at("innovation").is_string()) throw ModelValidationError("innovation must be a string");
            innovation = innovation_from_name(j.at("innovation").get<std::string>());
        }
        const double eps = j.contains("truncation_eps") ? number(j.at("truncation_eps"), "truncation_eps") : 1e-8;
        return LinearAdaptedModel(std::move(coeffs), tail, innovation, eps);
    }

    if (name == "MarkovFunctionalModel") {
        reject_unknown(j, {"variant", "m", "kernel", "stationary", "observable", "centered"}, "MarkovFunctionalModel");
        const std::size_t m = count(field(j, "m", name), "m");
        const auto& rows = field(j, "kernel", name);
        if (!rows.is_array() || rows.size() != m) throw ModelValidationError("kernel must have m rows");
        std::vector<double> kernel;
        for (const auto& row : rows) {
            auto r = numbers(row, "kernel row");
            if (r.size() != m) throw ModelValidationError("kernel rows must have m entries");
            kernel.insert(kernel.end(), r.begin(), r.end());
        }
        auto stationary = numbers(field(j, "stationary", name), "stationary");
        auto observable = numbers(field(j, "observable", name), "observable");
        bool centered = false;
        if (j.contains("centered")) {
            if (!j.at("centered").is_boolean()) throw ModelValidationError("centered must be a boolean");
            centered = j.at("centered").get<bool>();
        }
        return MarkovFunctionalModel(m, std::move(kernel), std::move(stationary), std::move(observable), centered);
    }

    if (name == "CycleRotationModel") {
        reject_unknown(j, {"variant", "m", "observable"}, "CycleRotationModel");
        const std::size_t m = count(field(j, "m", name), "m");
        std::optional<std::vector<cplx>> obs;
        if (j.contains("observable")) {
            const auto& o = j.at("observable");
            if (!o.is_array()) throw ModelValidationError("observable must be an array");
            std::vector<cplx> values;
            for (const auto& v : o) values.push_back(complex_value(v));
            if (values.size() != m) throw ModelValidationError("observable must have m entries");
            obs = std::move(values);
        }
        return CycleRotationModel(m, std::move(obs));
    }

    throw ModelValidationError("unknown model variant '" + name + "'");
}

json model_to_json(const ProcessModel& model) {
    json j;
    if (const auto* lin = model.linear()) {
        j["variant"] = "LinearAdaptedModel";
        j["coeffs"] = lin->prefix();
        if (const auto& t = lin->tail()) j["tail"] = {{"rho", t->rho}, {"scale", t->scale}};
        j["innovation"] = innovation_name(lin->innovation());
        j["truncation_eps"] = lin->truncation_eps();
    } else if (const auto* mk = model.markov()) {
        const std::size_t m = mk->states();
        j["variant"] = "MarkovFunctionalModel";
        j["m"] = m;
        json rows = json::array();
        for (std::size_t i = 0; i < m; ++i)
            rows.push_back(std::vector<double>(mk->kernel_rows().begin() + static_cast<long>(i * m),
                                               mk->kernel_rows().begin() + static_cast<long>((i + 1) * m)));
        j["kernel"] = rows;
        j["stationary"] = std::vector<double>(mk->chain().stationary().begin(), mk->chain().stationary().end());
        j["observable"] = mk->observable();
        j["centered"] = mk->centered();
    } else {
        const auto* cy = model.cycle();
        j["variant"] = "CycleRotationModel";
        j["m"] = cy->states();
        json obs = json::array();
        for (const cplx& v : cy->observable()) obs.push_back({v.real(), v.imag()});
        j["observable"] = obs;
    }
    return j;
}

ProcessModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open model file " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ModelValidationError("model file " + path.string() + " is not valid JSON: " + e.what());
    }
    return model_from_json(j);
}

}  // namespace quench
