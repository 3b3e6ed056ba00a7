#pragma once

#include <string>

#include "fignet/model/config.hpp"

namespace fignet {

std::string model_config_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const std::string& text);

}  // namespace fignet
