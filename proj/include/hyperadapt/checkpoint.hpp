#pragma once

#include <string>
#include <utility>
#include <vector>

#include "hyperadapt/models.hpp"

namespace hyperadapt {

// Checkpoint = <prefix>.json manifest (names, shapes, offsets, config,
// vocabularies, DRF sets) + <prefix>.bin flat little-endian f64 tensor data,
// row-major, in manifest order. Self-contained: the static embedding table
// travels with the model so `predict` needs no side inputs.
void save_model(TaskModel& model, const std::string& prefix,
                const std::vector<std::pair<std::string, std::string>>& config_echo = {});

// Loads from the manifest path written by save_model.
TaskModel load_model(const std::string& manifest_path);

}  // namespace hyperadapt
