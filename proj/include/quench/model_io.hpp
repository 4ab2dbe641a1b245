#pragma once

#include <filesystem>

#include <json.hpp>

#include "quench/models.hpp"

namespace quench {

/// Parses a model specification object. Unknown keys and invariant violations
/// raise ModelValidationError naming the offending field.
ProcessModel model_from_json(const nlohmann::json& j);
nlohmann::json model_to_json(const ProcessModel& model);
ProcessModel load_model(const std::filesystem::path& path);

const char* innovation_name(InnovationKind kind);
InnovationKind innovation_from_name(const std::string& name);

}  // namespace quench
