#pragma once

#include <string>
#include <vector>

#include "memlab/engine.hpp"

// Canned platform models. Cache geometry, shared-cache MLP, and DRAM bank
// bits follow the published characteristics of each board; DRAM timings are
// conventional open-page values.

namespace memlab::presets {

std::vector<std::string> preset_names();

// Throws std::invalid_argument for unknown names.
engine::SimConfig make_preset(const std::string& name);

}  // namespace memlab::presets
