// Copyright 2026 AVRFN Contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>

#include "core/image.hpp"

namespace avrfn {

// Keys cubic convolution kernel with a = -0.5.
double bicubic_kernel(double x);

// Tap weights for the four samples at offsets {-1, 0, 1, 2} around the
// interpolation site, given the fractional phase in [0,1). Sums to 1.
std::array<double, 4> bicubic_weights(double frac);

// Separable cubic-convolution resampling with clamped edges. Output pixel
// centers map back through src = (dst + 0.5) * (in_size / out_size) - 0.5, so
// equal sizes reproduce the input exactly.
GrayImage bicubic_resize(const GrayImage& img, int out_w, int out_h);

} // namespace avrfn
