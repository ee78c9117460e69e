#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "twinfeed/predictor.hpp"

namespace twinfeed {

/// Versioned "JRNN" blob: config, shape, normalization, weight stages and
/// recurrent state as little-endian f64. Reloading yields a bit-identical
/// model, so a saved twin can stand in for the live one.
std::vector<std::uint8_t> serialize_model(const PredictorModel& model);
PredictorModel deserialize_model(std::span<const std::uint8_t> blob);

void save_model(const PredictorModel& model, const std::filesystem::path& path);
PredictorModel load_model(const std::filesystem::path& path);

}  // namespace twinfeed
