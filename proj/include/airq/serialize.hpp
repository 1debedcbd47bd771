#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "airq/dataset.hpp"

namespace airq::serialize {

nlohmann::json norm_to_json(const data::NormalizationParams& p);
data::NormalizationParams norm_from_json(const nlohmann::json& j);

nlohmann::json read_json(const std::filesystem::path& path);

/// Writes pretty-printed JSON via a temp file and rename.
void write_json_atomic(const nlohmann::json& doc, const std::filesystem::path& path);

/// Writes arbitrary text via a temp file and rename.
void write_text_atomic(const std::string& text, const std::filesystem::path& path);

/// Shortest round-trip decimal formatting for doubles in CSV output.
std::string format_double(double v);

}  // namespace airq::serialize
