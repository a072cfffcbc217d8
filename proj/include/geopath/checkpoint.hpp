#pragma once

#include <filesystem>

#include "geopath/jsonwrite.hpp"
#include "geopath/nn.hpp"

namespace geopath {

// Versioned JSON checkpoint:
//   {"version":1,"config":{...},"layers":[{"w":{"rows":..,"cols":..,"data":[..]},"b":[..]},..]}
// Hidden layers additionally carry "ln_gain"/"ln_shift" when layer
// normalization is enabled. Doubles are written with 17 significant digits
// so a save/load round-trip is bit-exact.
inline constexpr int kCheckpointVersion = 1;

void save_model(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_model(const std::filesystem::path& path);

void write_config(JsonWriter& w, const MlpConfig& config);
std::string config_to_json(const MlpConfig& config);
MlpConfig config_from_json_text(const std::string& text);

}  // namespace geopath
