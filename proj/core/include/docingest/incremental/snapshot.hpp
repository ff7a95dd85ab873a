#pragma once

#include <string>

#include "docingest/incremental/classifier.hpp"
#include "docingest/json_io.hpp"

namespace docingest::incremental {

inline constexpr int kModelFormatVersion = 1;

std::string to_string(HeadType head);
/// Throws std::invalid_argument on an unknown name.
HeadType parse_head_type(const std::string& name);

std::string to_string(Activation activation);
/// Throws std::invalid_argument on an unknown name.
Activation parse_activation(const std::string& name);

/// {"format_version", "head", "margin", "activation", "groups": [{"rows", "cols",
/// "weight" (row-major), "bias"}]}.
OrderedJson model_to_json(const GroupedClassifier& model);

/// Throws ValidationError listing every malformed field.
GroupedClassifier model_from_json(const nlohmann::json& j);

}  // namespace docingest::incremental
