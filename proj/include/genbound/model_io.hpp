#pragma once

#include <genbound/model.hpp>

#include "json.hpp"

#include <filesystem>

namespace genbound {

// {"dims": [M0, ..., Q], "weights": [[row-major W_1], ...], "biases": [[b_1], ...]}
// Doubles are written in shortest round-trip form, so save/load is bit-exact.

nlohmann::json model_to_json(const NetworkParamsd& params);
NetworkParamsd model_from_json(const nlohmann::json& j);

void save_model(const std::filesystem::path& path, const NetworkParamsd& params);
NetworkParamsd load_model(const std::filesystem::path& path);

}  // namespace genbound
