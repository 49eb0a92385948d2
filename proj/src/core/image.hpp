// Copyright 2026 AVRFN Contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "core/tensor.hpp"

namespace avrfn {

// Single-channel image. Pixel values live in the declared intensity domain:
// [0,255] for 8-bit sources, [0,65535] for 16-bit, [0,1] once normalized.
struct GrayImage {
    int width = 0;
    int height = 0;
    double max_value = 255.0;
    std::vector<double> pixels; // row-major, y*width + x

    double at(int y, int x) const { return pixels[std::size_t(y) * width + x]; }
    double& at(int y, int x) { return pixels[std::size_t(y) * width + x]; }
    bool empty() const { return pixels.empty(); }
};

GrayImage make_image(int width, int height, double max_value = 255.0, double fill = 0.0);

// Reads 8/16-bit grayscale or RGB(A) PNG and binary PGM (P5). Multi-channel
// sources convert to gray by channel mean; alpha is ignored.
GrayImage load_image(const std::string& path);

// Writes grayscale PNG or PGM chosen by extension (.png / .pgm). Values are
// rounded to the integer domain given by max_value (255 or 65535).
void save_image(const GrayImage& img, const std::string& path);

// copy in the [0,1] domain
GrayImage normalized(const GrayImage& img);

Tensor to_tensor(const GrayImage& img);                    // (1,h,w,1), values as stored
GrayImage from_tensor(const Tensor& t, double max_value);  // first batch sample

// Sorted image paths from a directory (png/pgm) or a manifest file listing one
// path per line.
std::vector<std::string> list_image_files(const std::string& dir_or_manifest);

} // namespace avrfn
