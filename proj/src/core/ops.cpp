// Copyright 2026 AVRFN Contributors
// SPDX-License-Identifier: Apache-2.0

#include "core/ops.hpp"

#include <cmath>
#include <cstring>

#include "core/gemm.hpp"

namespace avrfn {

namespace {

enum class Bcast { same, scalar, channel };

Bcast broadcast_mode(const Shape& a, const Shape& b, const char* op)
{
    if (a == b)
        return Bcast::same;
    if (b.elems() == 1)
        return Bcast::scalar;
    if (b.n == 1 && b.h == 1 && b.w == 1 && b.c == a.c)
        return Bcast::channel;
    fail(ErrorCode::shape_mismatch,
         std::string(op) + ": shapes " + a.str() + " and " + b.str() + " do not broadcast");
}

// flat index of the b element matched with flat index i of a
inline std::size_t bcast_index(Bcast mode, std::size_t i, int c)
{
    switch (mode) {
    case Bcast::same: return i;
    case Bcast::scalar: return 0;
    case Bcast::channel: return i % std::size_t(c);
    }
    return 0;
}

enum class BinOp { add, sub, mul, div };

Tensor binary(BinOp op, const Tensor& a, const Tensor& b, const char* name)
{
    Bcast mode = broadcast_mode(a.shape(), b.shape(), name);
    auto av = a.data();
    auto bv = b.data();
    const int c = a.shape().c;

    if (op == BinOp::div) {
        for (double d : bv)
            require(d != 0.0, ErrorCode::numeric, std::string(name) + ": division by zero");
    }

    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < av.size(); ++i) {
        double bi = bv[bcast_index(mode, i, c)];
        switch (op) {
        case BinOp::add: out[i] = av[i] + bi; break;
        case BinOp::sub: out[i] = av[i] - bi; break;
        case BinOp::mul: out[i] = av[i] * bi; break;
        case BinOp::div: out[i] = av[i] / bi; break;
        }
    }
    ensure_finite(out, name);
    Tensor result = Tensor::from_data(a.shape(), std::move(out));

    OpArgs rec;
    int pa = rec.arg(a);
    int pb = rec.arg(b);
    rec.finish(result, {pa, pb},
               [op, mode, a, b, c](std::span<const double> g, const std::vector<double*>& gp) {
                   auto av = a.data();
                   auto bv = b.data();
                   double* ga = gp[0];
                   double* gb = gp[1];
                   for (std::size_t i = 0; i < g.size(); ++i) {
                       std::size_t j = bcast_index(mode, i, c);
                       double bi = bv[j];
                       switch (op) {
                       case BinOp::add:
                           if (ga) ga[i] += g[i];
                           if (gb) gb[j] += g[i];
                           break;
                       case BinOp::sub:
                           if (ga) ga[i] += g[i];
                           if (gb) gb[j] -= g[i];
                           break;
                       case BinOp::mul:
                           if (ga) ga[i] += g[i] * bi;
                           if (gb) gb[j] += g[i] * av[i];
                           break;
                       case BinOp::div:
                           if (ga) ga[i] += g[i] / bi;
                           if (gb) gb[j] -= g[i] * av[i] / (bi * bi);
                           break;
                       }
                   }
               });
    return result;
}

Tensor unary(const Tensor& x, const char* name, double (*f)(double),
             double (*df_from_out)(double out, double in))
{
    auto xv = x.data();
    std::vector<double> out(xv.size());
    for (std::size_t i = 0; i < xv.size(); ++i)
        out[i] = f(xv[i]);
    ensure_finite(out, name);
    Tensor result = Tensor::from_data(x.shape(), std::move(out));

    OpArgs rec;
    int px = rec.arg(x);
    rec.finish(result, {px},
               [x, result, df_from_out](std::span<const double> g, const std::vector<double*>& gp) {
                   if (!gp[0])
                       return;
                   auto xv = x.data();
                   auto ov = result.data();
                   for (std::size_t i = 0; i < g.size(); ++i)
                       gp[0][i] += g[i] * df_from_out(ov[i], xv[i]);
               });
    return result;
}

} // namespace

Tensor add(const Tensor& a, const Tensor& b) { return binary(BinOp::add, a, b, "add"); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary(BinOp::sub, a, b, "sub"); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary(BinOp::mul, a, b, "mul"); }
Tensor div(const Tensor& a, const Tensor& b) { return binary(BinOp::div, a, b, "div"); }

Tensor add(const Tensor& a, double s) { return binary(BinOp::add, a, Tensor::scalar(s), "add"); }
Tensor sub(const Tensor& a, double s) { return binary(BinOp::sub, a, Tensor::scalar(s), "sub"); }
Tensor mul(const Tensor& a, double s) { return binary(BinOp::mul, a, Tensor::scalar(s), "mul"); }
Tensor div(const Tensor& a, double s) { return binary(BinOp::div, a, Tensor::scalar(s), "div"); }

Tensor relu(const Tensor& x)
{
    return unary(
        x, "relu", [](double v) { return v > 0.0 ? v : 0.0; },
        [](double, double in) { return in > 0.0 ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& x)
{
    return unary(
        x, "sigmoid", [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
        [](double out, double) { return out * (1.0 - out); });
}

Tensor sqrt(const Tensor& x)
{
    return unary(
        x, "sqrt", [](double v) { return std::sqrt(v); },
        [](double out, double) { return out > 0.0 ? 0.5 / out : 0.0; });
}

namespace {

Tensor reduce(const Tensor& x, bool on, bool oh, bool ow, bool oc, bool take_mean, const char* name)
{
    const Shape s = x.shape();
    Shape os{on ? 1 : s.n, oh ? 1 : s.h, ow ? 1 : s.w, oc ? 1 : s.c};
    const std::size_t count = s.elems() / os.elems();
    const double scale = take_mean ? 1.0 / double(count) : 1.0;

    auto xv = x.data();
    std::vector<double> out(os.elems(), 0.0);
    for (int ni = 0; ni < s.n; ++ni)
        for (int y = 0; y < s.h; ++y)
            for (int xx = 0; xx < s.w; ++xx)
                for (int ci = 0; ci < s.c; ++ci)
                    out[os.index(on ? 0 : ni, oh ? 0 : y, ow ? 0 : xx, oc ? 0 : ci)] +=
                        xv[s.index(ni, y, xx, ci)];
    for (double& v : out)
        v *= scale;
    ensure_finite(out, name);
    Tensor result = Tensor::from_data(os, std::move(out));

    OpArgs rec;
    int px = rec.arg(x);
    rec.finish(result, {px},
               [s, os, on, oh, ow, oc, scale](std::span<const double> g,
                                              const std::vector<double*>& gp) {
                   if (!gp[0])
                       return;
                   for (int ni = 0; ni < s.n; ++ni)
                       for (int y = 0; y < s.h; ++y)
                           for (int xx = 0; xx < s.w; ++xx)
                               for (int ci = 0; ci < s.c; ++ci)
                                   gp[0][s.index(ni, y, xx, ci)] +=
                                       scale * g[os.index(on ? 0 : ni, oh ? 0 : y, ow ? 0 : xx,
                                                          oc ? 0 : ci)];
               });
    return result;
}

} // namespace

Tensor reduce_sum(const Tensor& x, bool on, bool oh, bool ow, bool oc)
{
    return reduce(x, on, oh, ow, oc, false, "reduce_sum");
}

Tensor reduce_mean(const Tensor& x, bool on, bool oh, bool ow, bool oc)
{
    return reduce(x, on, oh, ow, oc, true, "reduce_mean");
}

Tensor sum(const Tensor& x) { return reduce(x, true, true, true, true, false, "sum"); }
Tensor mean(const Tensor& x) { return reduce(x, true, true, true, true, true, "mean"); }

Tensor reshape(const Tensor& x, Shape s)
{
    require(s.elems() == x.size(), ErrorCode::shape_mismatch,
            "reshape: " + x.shape().str() + " has " + std::to_string(x.size()) +
                " elements, target " + s.str());
    std::vector<double> out(x.data().begin(), x.data().end());
    Tensor result = Tensor::from_data(s, std::move(out));

    OpArgs rec;
    int px = rec.arg(x);
    rec.finish(result, {px}, [](std::span<const double> g, const std::vector<double*>& gp) {
        if (!gp[0])
            return;
        for (std::size_t i = 0; i < g.size(); ++i)
            gp[0][i] += g[i];
    });
    return result;
}

Tensor concat_channels(const std::vector<Tensor>& parts)
{
    require(!parts.empty(), ErrorCode::invalid_argument, "concat_channels: no inputs");
    const Shape first = parts[0].shape();
    int total_c = 0;
    for (const Tensor& p : parts) {
        const Shape s = p.shape();
        require(s.n == first.n && s.h == first.h && s.w == first.w, ErrorCode::shape_mismatch,
                "concat_channels: spatial mismatch " + first.str() + " vs " + s.str());
        total_c += s.c;
    }
    Shape os{first.n, first.h, first.w, total_c};
    std::vector<double> out(os.elems());
    const std::size_t pixels = std::size_t(os.n) * os.h * os.w;
    for (std::size_t px = 0; px < pixels; ++px) {
        double* dst = out.data() + px * total_c;
        for (const Tensor& p : parts) {
            const int pc = p.shape().c;
            const double* src = p.data().data() + px * pc;
            std::memcpy(dst, src, sizeof(double) * pc);
            dst += pc;
        }
    }
    Tensor result = Tensor::from_data(os, std::move(out));

    OpArgs rec;
    std::vector<int> ids;
    ids.reserve(parts.size());
    for (const Tensor& p : parts)
        ids.push_back(rec.arg(p));
    std::vector<int> part_c;
    for (const Tensor& p : parts)
        part_c.push_back(p.shape().c);
    rec.finish(result, ids,
               [pixels, total_c, part_c](std::span<const double> g, const std::vector<double*>& gp) {
                   for (std::size_t px = 0; px < pixels; ++px) {
                       const double* src = g.data() + px * total_c;
                       for (std::size_t k = 0; k < part_c.size(); ++k) {
                           if (gp[k]) {
                               double* dst = gp[k] + px * part_c[k];
                               for (int c = 0; c < part_c[k]; ++c)
                                   dst[c] += src[c];
                           }
                           src += part_c[k];
                       }
                   }
               });
    return result;
}

Tensor concat_batch(const std::vector<Tensor>& parts)
{
    require(!parts.empty(), ErrorCode::invalid_argument, "concat_batch: no inputs");
    const Shape first = parts[0].shape();
    int total_n = 0;
    for (const Tensor& p : parts) {
        const Shape s = p.shape();
        require(s.h == first.h && s.w == first.w && s.c == first.c, ErrorCode::shape_mismatch,
                "concat_batch: sample shape mismatch " + first.str() + " vs " + s.str());
        total_n += s.n;
    }
    Shape os{total_n, first.h, first.w, first.c};
    std::vector<double> out;
    out.reserve(os.elems());
    for (const Tensor& p : parts)
        out.insert(out.end(), p.data().begin(), p.data().end());
    Tensor result = Tensor::from_data(os, std::move(out));

    OpArgs rec;
    std::vector<int> ids;
    std::vector<std::size_t> sizes;
    for (const Tensor& p : parts) {
        ids.push_back(rec.arg(p));
        sizes.push_back(p.size());
    }
    rec.finish(result, ids, [sizes](std::span<const double> g, const std::vector<double*>& gp) {
        std::size_t off = 0;
        for (std::size_t k = 0; k < sizes.size(); ++k) {
            if (gp[k]) {
                for (std::size_t i = 0; i < sizes[k]; ++i)
                    gp[k][i] += g[off + i];
            }
            off += sizes[k];
        }
    });
    return result;
}

Tensor slice_batch(const Tensor& x, int index)
{
    const Shape s = x.shape();
    require(index >= 0 && index < s.n, ErrorCode::invalid_argument,
            "slice_batch: index " + std::to_string(index) + " out of range for " + s.str());
    Shape os{1, s.h, s.w, s.c};
    const std::size_t block = os.elems();
    auto xv = x.data();
    std::vector<double> out(xv.begin() + index * block, xv.begin() + (index + 1) * block);
    Tensor result = Tensor::from_data(os, std::move(out));

    OpArgs rec;
    int px = rec.arg(x);
    rec.finish(result, {px},
               [block, index](std::span<const double> g, const std::vector<double*>& gp) {
                   if (!gp[0])
                       return;
                   double* dst = gp[0] + index * block;
                   for (std::size_t i = 0; i < block; ++i)
                       dst[i] += g[i];
               });
    return result;
}

Tensor pick(const Tensor& x, int ni, int y, int xi, int ci)
{
    const Shape s = x.shape();
    require(ni >= 0 && ni < s.n && y >= 0 && y < s.h && xi >= 0 && xi < s.w && ci >= 0 && ci < s.c,
            ErrorCode::invalid_argument, "pick: unit out of range for " + s.str());
    const std::size_t idx = s.index(ni, y, xi, ci);
    Tensor result = Tensor::scalar(x.data()[idx]);

    OpArgs rec;
    int px = rec.arg(x);
    rec.finish(result, {px}, [idx](std::span<const double> g, const std::vector<double*>& gp) {
        if (gp[0])
            gp[0][idx] += g[0];
    });
    return result;
}

MatrixView as_matrix(const Tensor& x, int rows, int cols)
{
    require(std::size_t(rows) * cols == x.size(), ErrorCode::shape_mismatch,
            "as_matrix: " + std::to_string(rows) + "x" + std::to_string(cols) +
                " does not cover " + x.shape().str());
    return {reshape(x, Shape{1, rows, 1, cols})};
}

MatrixView mat_from(std::vector<double> v, int rows, int cols)
{
    return {Tensor::from_data(Shape{1, rows, 1, cols}, std::move(v))};
}

MatrixView mat_identity(int n)
{
    std::vector<double> v(std::size_t(n) * n, 0.0);
    for (int i = 0; i < n; ++i)
        v[std::size_t(i) * n + i] = 1.0;
    return mat_from(std::move(v), n, n);
}

MatrixView matmul(const MatrixView& a, const MatrixView& b)
{
    const int m = a.rows(), k = a.cols(), k2 = b.rows(), n = b.cols();
    require(k == k2, ErrorCode::shape_mismatch,
            "matmul: inner dimensions " + std::to_string(k) + " vs " + std::to_string(k2));
    std::vector<double> out(std::size_t(m) * n);
    gemm(m, k, n, a.t.data().data(), b.t.data().data(), out.data(), false);
    ensure_finite(out, "matmul");
    Tensor result = Tensor::from_data(Shape{1, m, 1, n}, std::move(out));

    OpArgs rec;
    Tensor at = a.t, bt = b.t;
    int pa = rec.arg(at);
    int pb = rec.arg(bt);
    rec.finish(result, {pa, pb},
               [at, bt, m, n, k](std::span<const double> g, const std::vector<double*>& gp) {
                   if (gp[0]) { // dA += dC * B^T
                       std::vector<double> btrans(std::size_t(n) * k);
                       auto bv = bt.data();
                       for (int l = 0; l < k; ++l)
                           for (int j = 0; j < n; ++j)
                               btrans[std::size_t(j) * k + l] = bv[std::size_t(l) * n + j];
                       std::vector<double> da(std::size_t(m) * k);
                       gemm(m, n, k, g.data(), btrans.data(), da.data(), false);
                       for (std::size_t i = 0; i < da.size(); ++i)
                           gp[0][i] += da[i];
                   }
                   if (gp[1]) // dB += A^T * dC
                       gemm_at_accumulate(m, k, n, at.data().data(), g.data(), gp[1]);
               });
    return {result};
}

MatrixView transpose(const MatrixView& a)
{
    const int m = a.rows(), n = a.cols();
    auto av = a.t.data();
    std::vector<double> out(std::size_t(m) * n);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            out[std::size_t(j) * m + i] = av[std::size_t(i) * n + j];
    Tensor result = Tensor::from_data(Shape{1, n, 1, m}, std::move(out));

    OpArgs rec;
    Tensor at = a.t;
    int pa = rec.arg(at);
    rec.finish(result, {pa},
               [m, n](std::span<const double> g, const std::vector<double*>& gp) {
                   if (!gp[0])
                       return;
                   for (int j = 0; j < n; ++j)
                       for (int i = 0; i < m; ++i)
                           gp[0][std::size_t(i) * n + j] += g[std::size_t(j) * m + i];
               });
    return {result};
}

Tensor trace(const MatrixView& a)
{
    const int m = a.rows(), n = a.cols();
    require(m == n, ErrorCode::shape_mismatch,
            "trace: matrix is " + std::to_string(m) + "x" + std::to_string(n) + ", not square");
    auto av = a.t.data();
    double acc = 0.0;
    for (int i = 0; i < m; ++i)
        acc += av[std::size_t(i) * n + i];
    Tensor result = Tensor::scalar(acc);

    OpArgs rec;
    Tensor at = a.t;
    int pa = rec.arg(at);
    rec.finish(result, {pa}, [m, n](std::span<const double> g, const std::vector<double*>& gp) {
        if (!gp[0])
            return;
        for (int i = 0; i < m; ++i)
            gp[0][std::size_t(i) * n + i] += g[0];
    });
    return result;
}

} // namespace avrfn
