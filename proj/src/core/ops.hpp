// Copyright 2026 AVRFN Contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "core/tensor.hpp"

namespace avrfn {

// Binary elementwise ops. b may be: the same shape as a, a single-element
// tensor (scalar broadcast), or a (1,1,1,C) channel vector broadcast over
// (n,h,w). Gradients flow into both operands.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

// Scalar-constant variants; the constant takes no gradient.
Tensor add(const Tensor& a, double s);
Tensor sub(const Tensor& a, double s);
Tensor mul(const Tensor& a, double s);
Tensor div(const Tensor& a, double s);

Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor sqrt(const Tensor& x);

// Reductions. Reduced axes collapse to extent 1.
Tensor reduce_sum(const Tensor& x, bool over_n, bool over_h, bool over_w, bool over_c);
Tensor reduce_mean(const Tensor& x, bool over_n, bool over_h, bool over_w, bool over_c);
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

// Same data, new shape (element count must match).
Tensor reshape(const Tensor& x, Shape s);

Tensor concat_channels(const std::vector<Tensor>& parts);
Tensor concat_batch(const std::vector<Tensor>& parts);
Tensor slice_batch(const Tensor& x, int index);

// Single element as a (1,1,1,1) tensor; used to probe output units.
Tensor pick(const Tensor& x, int ni, int y, int xi, int ci);

// Matrix of shape rows x cols backed by a tensor laid out as (1, rows, 1, cols),
// which makes the flat storage plain row-major.
struct MatrixView {
    Tensor t;
    int rows() const { return t.shape().h; }
    int cols() const { return t.shape().c; }
    double at(int r, int c) const { return t.at(0, r, 0, c); }
};

MatrixView as_matrix(const Tensor& x, int rows, int cols);
MatrixView mat_from(std::vector<double> v, int rows, int cols);
MatrixView mat_identity(int n);
MatrixView matmul(const MatrixView& a, const MatrixView& b);
MatrixView transpose(const MatrixView& m);
Tensor trace(const MatrixView& m);

// Matrix helpers that forward to the elementwise ops.
inline MatrixView mat_add(const MatrixView& a, const MatrixView& b) { return {add(a.t, b.t)}; }
inline MatrixView mat_sub(const MatrixView& a, const MatrixView& b) { return {sub(a.t, b.t)}; }
inline MatrixView mat_scale(const MatrixView& a, double s) { return {mul(a.t, s)}; }
inline MatrixView mat_scale(const MatrixView& a, const Tensor& s) { return {mul(a.t, s)}; }

} // namespace avrfn
