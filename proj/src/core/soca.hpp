// Copyright 2026 AVRFN Contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "core/nn.hpp"
#include "core/ops.hpp"
#include "core/tensor.hpp"

namespace avrfn {

// Floor applied to the trace before the pre-normalization divide so constant
// feature maps (zero covariance) stay finite end to end.
inline constexpr double kTraceEpsilon = 1e-8;

// Second-order channel attention working state. All matrices are C x C and
// participate in the recorded graph, so gradients flow through the whole
// covariance -> square-root -> gate chain.
struct CovarianceState {
    MatrixView sigma;     // channel covariance
    MatrixView sigma_hat; // trace-normalized covariance
    Tensor trace_sigma;   // recorded scalar tr(sigma)
    MatrixView y_n;       // square-root iterate Y_n
    MatrixView z_n;       // inverse-square-root iterate Z_n
    MatrixView y_hat;     // trace-compensated square root
    std::vector<MatrixView> y_history; // Y_1 .. Y_n, kept for convergence studies
};

// Two-layer channel gate: 1x1 conv C -> C/reduction, ReLU, 1x1 conv back, sigmoid.
struct GateParams {
    Conv2dParams w0;
    Conv2dParams w1;
    int reduction = 16;

    int channels() const { return w0.in_channels(); }
    std::int64_t parameter_count() const
    {
        return w0.parameter_count() + w1.parameter_count();
    }
    void validate() const;
};

GateParams init_gate(uint64_t seed, int channels, int reduction);

// Channel covariance of one sample: x is (1,h,w,C), result is the C x C
// matrix (1/s) * sum_p (x_p - mean)(x_p - mean)^T with s = h*w.
CovarianceState covariance(const Tensor& x_single);

// sigma_hat = sigma / (tr(sigma) + eps)
CovarianceState& prenormalize(CovarianceState& st);

// Coupled iteration Y_n = 1/2 Y_{n-1} (3I - Z_{n-1} Y_{n-1}),
// Z_n = 1/2 (3I - Z_{n-1} Y_{n-1}) Z_{n-1}, from Y_0 = sigma_hat, Z_0 = I.
CovarianceState& newton_schulz(CovarianceState& st, int n_iter = 5);

// y_hat = sqrt(tr(sigma) + eps) * Y_n, undoing the pre-normalization.
CovarianceState& compensate(CovarianceState& st);

// Row mean of y_hat as a (1,1,1,C) channel statistics vector.
Tensor covariance_pool(const CovarianceState& st);

// sigmoid(w1 * relu(w0 * z)); every component lies in (0,1).
Tensor attention_gate(const Tensor& z, const GateParams& g);

// Full chain applied per batch sample; returns x scaled per channel.
Tensor soca_apply(const Tensor& x, const GateParams& g, int n_iter = 5);

} // namespace avrfn
