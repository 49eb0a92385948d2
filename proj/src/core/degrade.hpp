// Copyright 2026 AVRFN Contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/image.hpp"
#include "core/rng.hpp"
#include "core/tensor.hpp"

namespace avrfn {

struct DegradationConfig {
    int scale = 4;                 // one of 2, 3, 4
    double noise_mean = 0.0;       // 8-bit intensity levels
    double noise_variance = 10.0;  // squared 8-bit intensity levels
    bool noise_enabled = true;
    int lr_patch = 48;
    uint64_t seed = 0;

    int hr_patch() const { return scale * lr_patch; }
    void validate() const;
};

// Bicubic downscale by cfg.scale, Gaussian noise calibrated to the 8-bit
// scale, normalize by the source intensity maximum, clip to [0,1]. The noise
// stream comes from its own seed so any output is reproducible in isolation.
GrayImage degrade_image(const GrayImage& hr, const DegradationConfig& cfg, uint64_t noise_seed);

// degrade_image with the patch-size contract from the training pipeline
GrayImage degrade_patch(const GrayImage& hr_patch, const DegradationConfig& cfg,
                        uint64_t noise_seed);

GrayImage center_crop_multiple(const GrayImage& img, int multiple);
GrayImage crop(const GrayImage& img, int x0, int y0, int w, int h);

struct PatchProvenance {
    int image_index = 0;
    int x0 = 0, y0 = 0;
    uint64_t noise_seed = 0;
};

struct Batch {
    Tensor lr; // (B, p, p, 1) in [0,1]
    Tensor hr; // (B, scale*p, scale*p, 1) in [0,1]
    std::vector<PatchProvenance> provenance;
};

// Uniform random patch stream. Images smaller than the HR patch are skipped
// with a warning on stderr; every random draw comes from the config seed, so
// the stream of batches is deterministic.
class PatchSampler {
public:
    PatchSampler(std::vector<GrayImage> images, const DegradationConfig& cfg, int batch_size = 16);

    Batch next();

    int usable_images() const { return int(usable_.size()); }
    int batch_size() const { return batch_size_; }
    const DegradationConfig& config() const { return cfg_; }
    const GrayImage& image(int index) const { return images_[index]; }

    // exact stream position, for checkpoint round-trips
    std::string state() const;
    void restore_state(const std::string& s);

private:
    std::vector<GrayImage> images_;
    std::vector<int> usable_;
    DegradationConfig cfg_;
    int batch_size_;
    Rng rng_;
    uint64_t patch_counter_ = 0;
};

struct EvalPair {
    std::string id;
    GrayImage lr; // [0,1]
    GrayImage hr; // [0,1]
};

// Full-image pairs: center-crop to a multiple of the scale, degrade the whole
// frame, normalize the ground truth.
std::vector<EvalPair> make_eval_pairs(const std::vector<GrayImage>& images,
                                      const std::vector<std::string>& ids,
                                      const DegradationConfig& cfg);

} // namespace avrfn
