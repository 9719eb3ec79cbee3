#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "dmvcr/model.hpp"

namespace dmvcr {

inline constexpr int kCheckpointFormatVersion = 1;

/// Single JSON document: format version, model config, vocabulary, every
/// named parameter as {shape, data}, and an optional `run_config` echo.
/// Doubles are written in shortest round-trip form, so write-then-read is
/// bit-exact.
nlohmann::json checkpoint_json(const Model& model, const nlohmann::json& run_config = nullptr);
std::string serialize_checkpoint(const Model& model, const nlohmann::json& run_config = nullptr);
void save_checkpoint(const Model& model, const std::filesystem::path& path,
                     const nlohmann::json& run_config = nullptr);

Model model_from_checkpoint(const nlohmann::json& doc);
Model load_checkpoint(const std::filesystem::path& path);

nlohmann::json model_config_to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);

}  // namespace dmvcr
