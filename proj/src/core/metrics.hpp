// Copyright 2026 AVRFN Contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/image.hpp"

namespace avrfn {

// Peak signal-to-noise ratio in dB over [0,1]-domain images with MAX = 1.
// Identical images report +infinity (serialized as "inf" in CSV output).
double psnr(const GrayImage& a, const GrayImage& b);

// Single-scale SSIM: 11x11 Gaussian window with sigma 1.5, K1 = 0.01,
// K2 = 0.03, dynamic range 1. Windows are evaluated at fully-valid positions.
double ssim(const GrayImage& a, const GrayImage& b);

struct ImageScore {
    std::string id;
    double psnr = 0.0;
    double ssim = 0.0;
};

struct MetricReport {
    std::string test_set;
    int scale = 0;
    std::int64_t parameters = 0;
    std::vector<ImageScore> per_image;
    double psnr_mean = 0.0, psnr_std = 0.0;
    double ssim_mean = 0.0, ssim_std = 0.0;

    void finalize(); // recomputes the aggregate columns from per_image
};

// header: test_set,scale,parameters,psnr,ssim,psnr_std,ssim_std
std::string metrics_csv_header();
std::string metrics_csv_row(const MetricReport& r);
void write_metrics_csv(const std::string& path, const std::vector<MetricReport>& reports);
void write_per_image_csv(const std::string& path, const MetricReport& r);

} // namespace avrfn
