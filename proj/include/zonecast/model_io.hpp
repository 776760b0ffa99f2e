#pragma once

// JSON persistence for fitted regressors. Trees are nested node objects; GP
// arrays are base64 of little-endian IEEE-754 doubles.

#include "zonecast/regressors.hpp"

#include <json.hpp>

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace zonecast::model_io {

std::string base64_encode(std::span<const double> values);
/// Throws ValidationError on malformed input or a length not divisible by 8.
std::vector<double> base64_decode_doubles(std::string_view text);

nlohmann::json spec_to_json(const regressors::RegressorSpec& spec);
regressors::RegressorSpec spec_from_json(const nlohmann::json& j);

nlohmann::json tree_to_json(const regressors::Tree& tree);
regressors::Tree tree_from_json(const nlohmann::json& j);

nlohmann::json to_json(const regressors::Regressor& model);
/// Throws ValidationError for an unknown model type or a malformed document.
std::unique_ptr<regressors::Regressor> from_json(const nlohmann::json& j);

void save_model(const std::filesystem::path& path, const regressors::Regressor& model);
std::unique_ptr<regressors::Regressor> load_model(const std::filesystem::path& path);

}  // namespace zonecast::model_io
