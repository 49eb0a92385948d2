// Copyright 2026 AVRFN Contributors
// SPDX-License-Identifier: Apache-2.0

#include "core/degrade.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "core/bicubic.hpp"

namespace avrfn {

void DegradationConfig::validate() const
{
    require(scale == 2 || scale == 3 || scale == 4, ErrorCode::invalid_argument,
            "degradation: scale must be 2, 3 or 4");
    require(noise_variance >= 0.0, ErrorCode::invalid_argument,
            "degradation: noise variance must be >= 0");
    require(lr_patch >= 1, ErrorCode::invalid_argument, "degradation: patch size must be >= 1");
}

GrayImage degrade_image(const GrayImage& hr, const DegradationConfig& cfg, uint64_t noise_seed)
{
    cfg.validate();
    require(hr.width % cfg.scale == 0 && hr.height % cfg.scale == 0, ErrorCode::shape_mismatch,
            "degrade: image dimensions must be divisible by the scale");
    GrayImage lr = bicubic_resize(hr, hr.width / cfg.scale, hr.height / cfg.scale);

    // noise lives on the 8-bit scale regardless of source depth, so dividing by
    // the intensity maximum leaves its [0,1]-domain sigma at sqrt(var)/255
    const double sigma = std::sqrt(cfg.noise_variance);
    Rng noise(noise_seed);
    for (double& v : lr.pixels) {
        double x = v / hr.max_value;
        if (cfg.noise_enabled)
            x += noise.normal(cfg.noise_mean, sigma) / 255.0;
        v = std::clamp(x, 0.0, 1.0);
    }
    lr.max_value = 1.0;
    return lr;
}

GrayImage degrade_patch(const GrayImage& hr_patch, const DegradationConfig& cfg,
                        uint64_t noise_seed)
{
    require(hr_patch.width == cfg.hr_patch() && hr_patch.height == cfg.hr_patch(),
            ErrorCode::shape_mismatch,
            "degrade_patch: expected a " + std::to_string(cfg.hr_patch()) + " square patch");
    return degrade_image(hr_patch, cfg, noise_seed);
}

GrayImage crop(const GrayImage& img, int x0, int y0, int w, int h)
{
    require(x0 >= 0 && y0 >= 0 && x0 + w <= img.width && y0 + h <= img.height,
            ErrorCode::invalid_argument, "crop: window out of bounds");
    GrayImage out = make_image(w, h, img.max_value);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            out.at(y, x) = img.at(y0 + y, x0 + x);
    return out;
}

GrayImage center_crop_multiple(const GrayImage& img, int multiple)
{
    const int w = (img.width / multiple) * multiple;
    const int h = (img.height / multiple) * multiple;
    require(w >= multiple && h >= multiple, ErrorCode::invalid_argument,
            "center_crop_multiple: image smaller than one multiple");
    if (w == img.width && h == img.height)
        return img;
    return crop(img, (img.width - w) / 2, (img.height - h) / 2, w, h);
}

PatchSampler::PatchSampler(std::vector<GrayImage> images, const DegradationConfig& cfg,
                           int batch_size)
    : images_(std::move(images)), cfg_(cfg), batch_size_(batch_size), rng_(cfg.seed)
{
    cfg_.validate();
    require(batch_size_ >= 1, ErrorCode::invalid_argument, "sampler: batch size must be >= 1");
    const int need = cfg_.hr_patch();
    for (std::size_t i = 0; i < images_.size(); ++i) {
        if (images_[i].width >= need && images_[i].height >= need) {
            usable_.push_back(int(i));
        } else {
            std::cerr << "patch sampler: skipping image " << i << " (" << images_[i].width << "x"
                      << images_[i].height << " < " << need << ")\n";
        }
    }
    require(!usable_.empty(), ErrorCode::invalid_argument,
            "sampler: no image is at least " + std::to_string(need) + " pixels on each side");
}

Batch PatchSampler::next()
{
    const int p = cfg_.lr_patch;
    const int hp = cfg_.hr_patch();
    Batch batch;
    std::vector<double> lr_data;
    std::vector<double> hr_data;
    lr_data.reserve(std::size_t(batch_size_) * p * p);
    hr_data.reserve(std::size_t(batch_size_) * hp * hp);

    for (int b = 0; b < batch_size_; ++b) {
        const int img_idx = usable_[rng_.below(usable_.size())];
        const GrayImage& src = images_[img_idx];
        const int x0 = int(rng_.below(uint64_t(src.width - hp + 1)));
        const int y0 = int(rng_.below(uint64_t(src.height - hp + 1)));
        const uint64_t noise_seed = derive_seed(cfg_.seed, patch_counter_++);

        GrayImage hr_patch = crop(src, x0, y0, hp, hp);
        GrayImage lr_patch = degrade_patch(hr_patch, cfg_, noise_seed);

        for (double v : lr_patch.pixels)
            lr_data.push_back(v);
        for (double v : hr_patch.pixels)
            hr_data.push_back(v / src.max_value);
        batch.provenance.push_back({img_idx, x0, y0, noise_seed});
    }

    batch.lr = Tensor::from_data({batch_size_, p, p, 1}, std::move(lr_data));
    batch.hr = Tensor::from_data({batch_size_, hp, hp, 1}, std::move(hr_data));
    return batch;
}

std::string PatchSampler::state() const
{
    return std::to_string(patch_counter_) + "|" + rng_.state();
}

void PatchSampler::restore_state(const std::string& s)
{
    auto bar = s.find('|');
    require(bar != std::string::npos, ErrorCode::format, "sampler: malformed state");
    patch_counter_ = std::stoull(s.substr(0, bar));
    rng_.restore(s.substr(bar + 1));
}

std::vector<EvalPair> make_eval_pairs(const std::vector<GrayImage>& images,
                                      const std::vector<std::string>& ids,
                                      const DegradationConfig& cfg)
{
    cfg.validate();
    require(ids.empty() || ids.size() == images.size(), ErrorCode::invalid_argument,
            "make_eval_pairs: id list does not match image list");
    std::vector<EvalPair> pairs;
    pairs.reserve(images.size());
    for (std::size_t i = 0; i < images.size(); ++i) {
        GrayImage hr = center_crop_multiple(images[i], cfg.scale);
        EvalPair pair;
        pair.id = ids.empty() ? "image" + std::to_string(i) : ids[i];
        pair.lr = degrade_image(hr, cfg, derive_seed(cfg.seed, i));
        pair.hr = normalized(hr);
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

} // namespace avrfn
