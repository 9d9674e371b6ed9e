#pragma once

#include <string>

#include "dfalab/model.hpp"

namespace dfalab {

/// Binary model container ("DFLB"): versioned header, the full ModelConfig,
/// then every named parameter tensor in canonical order as raw
/// little-endian doubles. Round-trips bitwise. Byte layout in the README.
void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);

}  // namespace dfalab
