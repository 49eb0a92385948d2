// Copyright 2026 AVRFN Contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "core/ops.hpp"
#include "core/tensor.hpp"

namespace avrfn {

enum class Padding {
    same_zero, // zero padding of width dilation*(k-1)/2 keeps (h,w) unchanged
    valid,     // no padding, output shrinks by dilation*(k-1)
};

// One 2-D convolution, stride fixed at 1. Kernel is stored with axis order
// (k_h, k_w, in_ch, out_ch) in the 4-axis tensor layout; bias is (1,1,1,out_ch).
struct Conv2dParams {
    Tensor kernel;
    Tensor bias;
    int dilation = 1;
    Padding padding = Padding::same_zero;

    int kh() const { return kernel.shape().n; }
    int kw() const { return kernel.shape().h; }
    int in_channels() const { return kernel.shape().w; }
    int out_channels() const { return kernel.shape().c; }
    std::int64_t parameter_count() const;
    // receptive-field extent along one axis: dilation*(k-1)+1
    int rf_extent() const { return dilation * (kh() - 1) + 1; }

    void validate() const;
};

enum class InitScheme { he_uniform, glorot_uniform };

struct InitSpec {
    InitScheme scheme = InitScheme::he_uniform;
    uint64_t seed = 0;
};

Conv2dParams init_conv(const InitSpec& spec, int kh, int kw, int in_ch, int out_ch,
                       int dilation = 1, Padding padding = Padding::same_zero);

Tensor conv2d(const Tensor& x, const Conv2dParams& p);

// Channel-to-space permutation: (n, h, w, C*r^2) -> (n, h*r, w*r, C) with
// out[y][x][c] = in[y/r][x/r][C*r*(y mod r) + C*(x mod r) + c].
Tensor pixel_shuffle(const Tensor& x, int r);
// Exact inverse permutation of pixel_shuffle.
Tensor pixel_unshuffle(const Tensor& x, int r);

} // namespace avrfn
