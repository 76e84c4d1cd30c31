#pragma once

#include <filesystem>
#include <string>

#include "hamlearn/network.hpp"

namespace hamlearn::nn {

inline constexpr int kModelFormatVersion = 1;

/// JSON document: format tag, version, activation, layer_dims,
/// param_channels, training_params, and per layer a row-major weight array
/// plus bias array. Doubles are written in shortest round-trip form.
std::string model_to_string(const HnnModel& model);
HnnModel model_from_string(const std::string& text);

void save_model(const std::filesystem::path& path, const HnnModel& model);
HnnModel load_model(const std::filesystem::path& path);

}  // namespace hamlearn::nn
