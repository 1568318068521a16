#pragma once

// Checkpoints are a JSON manifest (tensor names, shapes, byte offsets,
// config echo, format version) next to one blob of little-endian f32
// values in row-major order:
//   <stem>.json, <stem>.bin

#include "mindface/nn/layers.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace mindface {

inline constexpr int kCheckpointFormatVersion = 1;

void save_checkpoint(const std::filesystem::path& stem, const nn::ConstParamRefs& params,
                     const nlohmann::json& config_echo);

// Loads values into `params`, matching by name; every tensor must be present
// with the same shape. Returns the config echo.
nlohmann::json load_checkpoint(const std::filesystem::path& stem, const nn::ParamRefs& params);

nlohmann::json read_checkpoint_manifest(const std::filesystem::path& stem);

bool checkpoint_exists(const std::filesystem::path& stem);

// Rounds every parameter to the nearest f32 so that an in-memory model and
// its saved checkpoint compute identical outputs.
void round_to_f32(const nn::ParamRefs& params);

}  // namespace mindface
