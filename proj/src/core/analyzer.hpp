// Copyright 2026 AVRFN Contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "core/model.hpp"

namespace avrfn {

// One convolution, as counted by the analyzer.
struct ConvConfig {
    int kernel = 3;
    int dilation = 1;
    int in_ch = 1;
    int out_ch = 1;
    bool bias = true;
};

std::int64_t conv_param_count(const ConvConfig& c);
int rf_extent(const ConvConfig& c); // dilation*(kernel-1)+1

// Parameter-count ratio of two convolutions at matched receptive-field extent.
// The comparison is only meaningful at equal extents, so mismatches are errors.
double compression_ratio(const ConvConfig& a, const ConvConfig& b);

struct LayerRow {
    std::string name;
    int kernel = 0;
    int dilation = 1;
    int in_ch = 0;
    int out_ch = 0;
    std::int64_t params = 0;
    // cumulative main-path receptive-field extent after this layer, measured in
    // input pixels (fractional after pixel shuffle raises the resolution)
    double rf_after = 0.0;
};

struct AnalyzerReport {
    Variant variant = Variant::avrfn;
    int scale = 4;
    std::vector<LayerRow> rows;
    std::int64_t total_params = 0;
    std::int64_t gate_params = 0;       // SOCA gate subtotal across all blocks
    std::int64_t block_post_params = 0; // ddrr replacement-conv subtotal
    int block_rf_extent = 0;            // conv-path extent of one residual block
    double rf_extent = 0.0;             // full main-path extent in input pixels

    std::string text() const;
    std::string csv() const;
};

AnalyzerReport analyze(const ModelSpec& spec);

// closed-form total; equals analyze(spec).total_params and the built model's count
std::int64_t count_params(const ModelSpec& spec);

struct ErfReport {
    int theoretical_extent = 0;
    int input_h = 0, input_w = 0;
    std::vector<double> gradient_magnitude; // input_h x input_w

    double max_magnitude() const;
    // pixels with |gradient| above tau * max
    int area(double tau = 0.01) const;
    bool nonzero_at(int y, int x) const;
};

// Backpropagates a one-hot gradient from output unit (out_y, out_x, out_c) of
// net(x) to a (1, in_h, in_w, 1) input and reports the support.
ErfReport erf_map(const std::function<Tensor(const Tensor&)>& net, int in_h, int in_w, int out_y,
                  int out_x, int out_c, int theoretical_extent);

} // namespace avrfn
