// Copyright 2026 AVRFN Contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/model.hpp"
#include "core/optimizer.hpp"

namespace avrfn {

// Single-file binary archive: versioned header, the model spec, training
// counters, the RNG state string, then every named parameter array (and the
// optimizer moments when present) as raw little-endian doubles in registry
// order. A trailing CRC-32 guards the whole payload. Saving a freshly loaded
// checkpoint reproduces the file byte for byte.
struct CheckpointData {
    ModelSpec spec;
    int epoch = 0;
    std::int64_t global_step = 0;
    bool has_optimizer = false;
    AdamConfig adam_config;
    std::int64_t adam_step = 0;
    std::vector<std::vector<double>> adam_m;
    std::vector<std::vector<double>> adam_v;
    std::string rng_state;
};

void save_checkpoint(const std::string& path, const Model& model, const Adam* adam, int epoch,
                     std::int64_t global_step, const std::string& rng_state);

// Rebuilds the model from the stored spec and overwrites its parameters.
CheckpointData load_checkpoint(const std::string& path, Model& model_out);

// Optimizer rebuilt from stored moments; errors if the checkpoint carried none.
Adam restore_adam(const CheckpointData& data, const ModelParams& params);

} // namespace avrfn
