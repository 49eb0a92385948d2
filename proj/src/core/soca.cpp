// Copyright 2026 AVRFN Contributors
// SPDX-License-Identifier: Apache-2.0

#include "core/soca.hpp"

#include "core/rng.hpp"

namespace avrfn {

void GateParams::validate() const
{
    w0.validate();
    w1.validate();
    require(reduction >= 1, ErrorCode::invalid_argument, "gate: reduction must be >= 1");
    require(w0.in_channels() % reduction == 0, ErrorCode::invalid_argument,
            "gate: reduction must divide the channel count");
    require(w0.out_channels() == w0.in_channels() / reduction &&
                w1.in_channels() == w0.out_channels() &&
                w1.out_channels() == w0.in_channels(),
            ErrorCode::shape_mismatch, "gate: layer widths do not chain");
}

GateParams init_gate(uint64_t seed, int channels, int reduction)
{
    require(channels >= 1 && reduction >= 1 && channels % reduction == 0,
            ErrorCode::invalid_argument, "init_gate: reduction must divide channels");
    GateParams g;
    g.reduction = reduction;
    g.w0 = init_conv({InitScheme::he_uniform, derive_seed(seed, 0)}, 1, 1, channels,
                     channels / reduction);
    g.w1 = init_conv({InitScheme::he_uniform, derive_seed(seed, 1)}, 1, 1, channels / reduction,
                     channels);
    g.validate();
    return g;
}

CovarianceState covariance(const Tensor& x_single)
{
    const Shape s = x_single.shape();
    require(s.n == 1, ErrorCode::shape_mismatch,
            "covariance: expects a single sample, got " + s.str());
    const int samples = s.h * s.w;
    require(samples >= 1, ErrorCode::invalid_argument, "covariance: empty feature map");

    // (1,h,w,C) and (1,h*w,1,C) share the same flat layout
    MatrixView feat = as_matrix(x_single, samples, s.c);
    Tensor col_mean = reshape(reduce_mean(feat.t, false, true, false, false), Shape{1, 1, 1, s.c});
    Tensor centered = sub(feat.t, col_mean);
    MatrixView centered_m{centered};
    MatrixView sigma = mat_scale(matmul(transpose(centered_m), centered_m), 1.0 / samples);

    CovarianceState st;
    st.sigma = sigma;
    return st;
}

namespace {

// max(t, eps) written as relu(t - eps) + eps so the graph stays differentiable;
// exact for any trace above the guard, finite at zero covariance
Tensor guarded_trace(const Tensor& t)
{
    return add(relu(sub(t, kTraceEpsilon)), kTraceEpsilon);
}

} // namespace

CovarianceState& prenormalize(CovarianceState& st)
{
    st.trace_sigma = trace(st.sigma);
    st.sigma_hat = {div(st.sigma.t, guarded_trace(st.trace_sigma))};
    return st;
}

CovarianceState& newton_schulz(CovarianceState& st, int n_iter)
{
    require(st.sigma_hat.t.defined(), ErrorCode::invalid_argument,
            "newton_schulz: prenormalize first");
    require(n_iter >= 1, ErrorCode::invalid_argument, "newton_schulz: need at least 1 iteration");
    const int c = st.sigma_hat.rows();
    MatrixView y = st.sigma_hat;
    MatrixView z = mat_identity(c);
    MatrixView three_i = mat_scale(mat_identity(c), 3.0);
    st.y_history.clear();
    for (int it = 0; it < n_iter; ++it) {
        MatrixView t = mat_sub(three_i, matmul(z, y));
        MatrixView y_next = mat_scale(matmul(y, t), 0.5);
        MatrixView z_next = mat_scale(matmul(t, z), 0.5);
        y = y_next;
        z = z_next;
        st.y_history.push_back(y);
    }
    st.y_n = y;
    st.z_n = z;
    return st;
}

CovarianceState& compensate(CovarianceState& st)
{
    require(st.y_n.t.defined() && st.trace_sigma.defined(), ErrorCode::invalid_argument,
            "compensate: run prenormalize and newton_schulz first");
    Tensor scale = sqrt(guarded_trace(st.trace_sigma));
    st.y_hat = mat_scale(st.y_n, scale);
    return st;
}

Tensor covariance_pool(const CovarianceState& st)
{
    require(st.y_hat.t.defined(), ErrorCode::invalid_argument, "covariance_pool: compensate first");
    const int c = st.y_hat.rows();
    Tensor row_mean = reduce_mean(st.y_hat.t, false, false, false, true); // (1,C,1,1)
    return reshape(row_mean, Shape{1, 1, 1, c});
}

Tensor attention_gate(const Tensor& z, const GateParams& g)
{
    g.validate();
    require(z.shape().c == g.channels(), ErrorCode::shape_mismatch,
            "attention_gate: statistics width " + std::to_string(z.shape().c) +
                " vs gate channels " + std::to_string(g.channels()));
    return sigmoid(conv2d(relu(conv2d(z, g.w0)), g.w1));
}

Tensor soca_apply(const Tensor& x, const GateParams& g, int n_iter)
{
    require(x.shape().c == g.channels(), ErrorCode::shape_mismatch,
            "soca_apply: input channels " + std::to_string(x.shape().c) + " vs gate channels " +
                std::to_string(g.channels()));
    std::vector<Tensor> scaled;
    scaled.reserve(x.shape().n);
    for (int ni = 0; ni < x.shape().n; ++ni) {
        Tensor sample = slice_batch(x, ni);
        CovarianceState st = covariance(sample);
        prenormalize(st);
        newton_schulz(st, n_iter);
        compensate(st);
        Tensor attn = attention_gate(covariance_pool(st), g);
        scaled.push_back(mul(sample, attn));
    }
    return concat_batch(scaled);
}

} // namespace avrfn
