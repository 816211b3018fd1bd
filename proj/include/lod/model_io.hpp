#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "lod/model.hpp"

namespace lod {

inline constexpr int kModelFormatVersion = 1;

/// Versioned JSON document: shape, kind and every table as a flat array.
/// Tables are stored row-major with the last variable fastest; theta tables
/// are latent-major (one row per joint latent state), recognition tables are
/// observed-major.
nlohmann::json model_to_json(const GenerativeModel& model);
GenerativeModel model_from_json(const nlohmann::json& doc);

void save_model(const GenerativeModel& model, const std::filesystem::path& path);
GenerativeModel load_model(const std::filesystem::path& path);

nlohmann::json pmf_to_json(const Pmf& pmf);
Pmf pmf_from_json(const nlohmann::json& doc);

}  // namespace lod
