// Copyright 2026 AVRFN Contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "core/degrade.hpp"
#include "core/metrics.hpp"
#include "core/model.hpp"
#include "core/optimizer.hpp"

namespace avrfn {

// mean over all elements of the squared difference; differentiable
Tensor mse_loss(const Tensor& pred, const Tensor& target);

struct TrainConfig {
    int epochs = 300;
    int steps_per_epoch = 100;
    AdamConfig adam;
    int checkpoint_every = 0;      // epochs between checkpoints; 0 = final only
    std::string checkpoint_path;   // empty disables checkpointing
    std::string loss_csv_path;     // empty disables the loss log
};

struct StepRecord {
    std::int64_t step = 0;
    int epoch = 0;
    double mse = 0.0;
};

struct FitResult {
    std::vector<StepRecord> history;
    int final_epoch = 0;
    std::int64_t final_step = 0;
};

using ProgressFn = std::function<void(int epoch, std::int64_t step, double mse)>;

// Sequential, single-threaded optimization loop: deterministic for a fixed
// sampler seed. A non-finite loss aborts with the step index and the batch
// provenance in the diagnostic. start_epoch/start_step continue a resumed run.
FitResult fit(Model& model, Adam& adam, PatchSampler& sampler, const TrainConfig& cfg,
              int start_epoch = 0, std::int64_t start_step = 0,
              const ProgressFn& progress = {});

void write_loss_csv(const std::string& path, const std::vector<StepRecord>& history);

// forward pass over a [0,1] image; output clipped back to [0,1]
GrayImage infer_image(const Model& model, const GrayImage& lr01);

GrayImage bicubic_upscale(const GrayImage& lr01, int scale);

struct EvalOptions {
    std::string test_set = "eval";
    int threads = 1;
    bool bicubic_baseline = false; // score plain bicubic upscaling instead of the model
    int border_crop = 0;           // HR-domain pixels trimmed from every edge before scoring
};

// Per-image PSNR/SSIM plus aggregates. Worker threads fan out over images;
// the report is assembled by pair order, so results do not depend on timing.
MetricReport evaluate(const Model* model, const std::vector<EvalPair>& pairs,
                      const EvalOptions& opts);

} // namespace avrfn
