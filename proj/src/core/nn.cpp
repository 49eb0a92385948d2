// Copyright 2026 AVRFN Contributors
// SPDX-License-Identifier: Apache-2.0

#include "core/nn.hpp"

#include <cmath>
#include <cstring>

#include "core/gemm.hpp"
#include "core/rng.hpp"

namespace avrfn {

std::int64_t Conv2dParams::parameter_count() const
{
    std::int64_t k = std::int64_t(kh()) * kw() * in_channels() * out_channels();
    return bias.defined() ? k + out_channels() : k;
}

void Conv2dParams::validate() const
{
    require(kernel.defined(), ErrorCode::invalid_argument, "conv2d: kernel not set");
    require(kh() % 2 == 1 && kw() % 2 == 1, ErrorCode::invalid_argument,
            "conv2d: kernel extent must be odd, got " + kernel.shape().str());
    require(dilation >= 1, ErrorCode::invalid_argument, "conv2d: dilation must be >= 1");
    if (bias.defined())
        require(bias.shape() == Shape{1, 1, 1, out_channels()}, ErrorCode::shape_mismatch,
                "conv2d: bias shape " + bias.shape().str());
}

Conv2dParams init_conv(const InitSpec& spec, int kh, int kw, int in_ch, int out_ch, int dilation,
                       Padding padding)
{
    require(kh >= 1 && kw >= 1 && in_ch >= 1 && out_ch >= 1, ErrorCode::invalid_argument,
            "init_conv: non-positive kernel shape");
    const double fan_in = double(kh) * kw * in_ch;
    const double fan_out = double(kh) * kw * out_ch;
    const double bound = spec.scheme == InitScheme::he_uniform
                             ? std::sqrt(6.0 / fan_in)
                             : std::sqrt(6.0 / (fan_in + fan_out));
    Rng rng(spec.seed);
    std::vector<double> w(std::size_t(kh) * kw * in_ch * out_ch);
    for (double& v : w)
        v = rng.uniform(-bound, bound);

    Conv2dParams p;
    p.kernel = Tensor::from_data(Shape{kh, kw, in_ch, out_ch}, std::move(w), true);
    p.bias = Tensor::zeros(Shape{1, 1, 1, out_ch}, true);
    p.dilation = dilation;
    p.padding = padding;
    p.validate();
    return p;
}

namespace {

struct ConvGeometry {
    Shape in;
    Shape out;
    int kh, kw, dilation, pad_h, pad_w;
    int patch() const { return kh * kw * in.c; } // tap-matrix row width
};

// Tap matrix for output pixels [m0, m0+mb): one row per pixel, columns ordered
// (ky, kx, ci) to line up with the kernel's flat (kh, kw, in, out) layout.
// Out-of-image taps gather zeros. Blocks of kGemmRowBlock rows keep this
// buffer L1-resident, so the big tap matrix never exists in memory.
void gather_taps(const ConvGeometry& geo, const double* in_sample, int m0, int mb, double* col)
{
    const int h = geo.in.h, w = geo.in.w, ci_n = geo.in.c;
    const int l = geo.dilation, kw = geo.kw;
    std::size_t idx = 0;
    for (int m = m0; m < m0 + mb; ++m) {
        const int y = m / geo.out.w;
        const int x = m % geo.out.w;
        for (int ky = 0; ky < geo.kh; ++ky) {
            const int iy = y - geo.pad_h + l * ky;
            const int ix0 = x - geo.pad_w;
            if (iy < 0 || iy >= h) {
                std::memset(col + idx, 0, sizeof(double) * kw * ci_n);
                idx += std::size_t(kw) * ci_n;
                continue;
            }
            const double* row = in_sample + std::size_t(iy) * w * ci_n;
            if (l == 1 && ix0 >= 0 && ix0 + kw <= w) {
                // the whole kernel row is one contiguous run
                std::memcpy(col + idx, row + std::size_t(ix0) * ci_n,
                            sizeof(double) * kw * ci_n);
                idx += std::size_t(kw) * ci_n;
            } else {
                for (int kx = 0; kx < kw; ++kx) {
                    const int ix = ix0 + l * kx;
                    if (ix >= 0 && ix < w)
                        std::memcpy(col + idx, row + std::size_t(ix) * ci_n,
                                    sizeof(double) * ci_n);
                    else
                        std::memset(col + idx, 0, sizeof(double) * ci_n);
                    idx += std::size_t(ci_n);
                }
            }
        }
    }
}

// scatter-add of a tap-matrix gradient block back onto the input sample
void scatter_taps_add(const ConvGeometry& geo, const double* dcol, int m0, int mb,
                      double* din_sample)
{
    const int h = geo.in.h, w = geo.in.w, ci_n = geo.in.c;
    std::size_t idx = 0;
    for (int m = m0; m < m0 + mb; ++m) {
        const int y = m / geo.out.w;
        const int x = m % geo.out.w;
        for (int ky = 0; ky < geo.kh; ++ky) {
            const int iy = y - geo.pad_h + geo.dilation * ky;
            for (int kx = 0; kx < geo.kw; ++kx) {
                const int ix = x - geo.pad_w + geo.dilation * kx;
                if (iy >= 0 && iy < h && ix >= 0 && ix < w) {
                    double* px = din_sample + (std::size_t(iy) * w + ix) * ci_n;
                    for (int c = 0; c < ci_n; ++c)
                        px[c] += dcol[idx++];
                } else {
                    idx += std::size_t(ci_n);
                }
            }
        }
    }
}

} // namespace

Tensor conv2d(const Tensor& x, const Conv2dParams& p)
{
    p.validate();
    const Shape s = x.shape();
    const int kh = p.kh(), kw = p.kw(), ci_n = p.in_channels(), co_n = p.out_channels();
    const int l = p.dilation;
    require(s.c == ci_n, ErrorCode::shape_mismatch,
            "conv2d: input has " + std::to_string(s.c) + " channels, kernel expects " +
                std::to_string(ci_n));

    const bool same = p.padding == Padding::same_zero;
    const int oh = same ? s.h : s.h - l * (kh - 1);
    const int ow = same ? s.w : s.w - l * (kw - 1);
    require(oh >= 1 && ow >= 1, ErrorCode::shape_mismatch,
            "conv2d: input " + s.str() + " smaller than the dilated kernel in valid mode");

    const ConvGeometry geo{s,
                           Shape{s.n, oh, ow, co_n},
                           kh,
                           kw,
                           l,
                           same ? l * (kh - 1) / 2 : 0,
                           same ? l * (kw - 1) / 2 : 0};
    const std::size_t rows = std::size_t(oh) * ow;       // output pixels per sample
    const std::size_t sample_in = std::size_t(s.h) * s.w * ci_n;
    const std::size_t sample_out = rows * co_n;

    auto xv = x.data();
    auto kv = p.kernel.data();
    const double* bv = p.bias.defined() ? p.bias.data().data() : nullptr;

    const int patch = geo.patch();
    PackedB kpack;
    pack_b(patch, co_n, kv.data(), kpack);

    std::vector<double> out(geo.out.elems());
    std::vector<double> colblk(std::size_t(kGemmRowBlock) * patch);
    for (int ni = 0; ni < s.n; ++ni) {
        const double* in_n = xv.data() + ni * sample_in;
        double* out_n = out.data() + ni * sample_out;
        for (std::size_t m0 = 0; m0 < rows; m0 += kGemmRowBlock) {
            const int mb = int(std::min<std::size_t>(kGemmRowBlock, rows - m0));
            gather_taps(geo, in_n, int(m0), mb, colblk.data());
            gemm_packed(mb, colblk.data(), kpack, out_n + m0 * co_n, false);
        }
        if (bv) {
            for (std::size_t r = 0; r < rows; ++r)
                for (int co = 0; co < co_n; ++co)
                    out_n[r * co_n + co] += bv[co];
        }
    }
    ensure_finite(out, "conv2d");
    Tensor result = Tensor::from_data(geo.out, std::move(out));

    OpArgs rec;
    Tensor kernel = p.kernel, bias = p.bias;
    int px_id = rec.arg(x);
    int pk_id = rec.arg(kernel);
    int pb_id = bias.defined() ? rec.arg(bias) : -1;
    rec.finish(result, {px_id, pk_id, pb_id},
               [x, kernel, geo, rows, sample_in, sample_out, co_n](
                   std::span<const double> g, const std::vector<double*>& gp) {
                   auto xv = x.data();
                   auto kv = kernel.data();
                   double* gx = gp[0];
                   double* gk = gp[1];
                   double* gb = gp[2];
                   const int patch = geo.patch();

                   std::vector<double> colblk;
                   if (gk)
                       colblk.resize(std::size_t(kGemmRowBlock) * patch);
                   std::vector<double> dcolblk;
                   PackedB ktpack; // kernel transposed to (out, taps), packed
                   if (gx) {
                       std::vector<double> kt(std::size_t(patch) * co_n);
                       for (int t = 0; t < patch; ++t)
                           for (int co = 0; co < co_n; ++co)
                               kt[std::size_t(co) * patch + t] = kv[std::size_t(t) * co_n + co];
                       pack_b(co_n, patch, kt.data(), ktpack);
                       dcolblk.resize(std::size_t(kGemmRowBlock) * patch);
                   }

                   for (int ni = 0; ni < geo.in.n; ++ni) {
                       const double* g_n = g.data() + ni * sample_out;
                       const double* in_n = xv.data() + ni * sample_in;
                       if (gb) {
                           for (std::size_t r = 0; r < rows; ++r)
                               for (int co = 0; co < co_n; ++co)
                                   gb[co] += g_n[r * co_n + co];
                       }
                       for (std::size_t m0 = 0; m0 < rows; m0 += kGemmRowBlock) {
                           const int mb = int(std::min<std::size_t>(kGemmRowBlock, rows - m0));
                           if (gk) {
                               gather_taps(geo, in_n, int(m0), mb, colblk.data());
                               gemm_at_accumulate(mb, patch, co_n, colblk.data(),
                                                  g_n + m0 * co_n, gk);
                           }
                           if (gx) {
                               gemm_packed(mb, g_n + m0 * co_n, ktpack, dcolblk.data(), false);
                               scatter_taps_add(geo, dcolblk.data(), int(m0), mb,
                                                gx + ni * sample_in);
                           }
                       }
                   }
               });
    return result;
}

namespace {

Tensor shuffle_permute(const Tensor& x, int r, bool forward_dir)
{
    require(r >= 1, ErrorCode::invalid_argument, "pixel_shuffle: factor must be >= 1");
    const Shape s = x.shape();
    Shape os;
    if (forward_dir) {
        require(s.c % (r * r) == 0, ErrorCode::shape_mismatch,
                "pixel_shuffle: channels " + std::to_string(s.c) + " not divisible by r^2");
        os = Shape{s.n, s.h * r, s.w * r, s.c / (r * r)};
    } else {
        require(s.h % r == 0 && s.w % r == 0, ErrorCode::shape_mismatch,
                "pixel_unshuffle: spatial dims of " + s.str() + " not divisible by r");
        os = Shape{s.n, s.h / r, s.w / r, s.c * r * r};
    }

    // both directions share the shuffle index map: fine = coarse-side sample
    const Shape& fine = forward_dir ? os : s;
    const Shape& coarse = forward_dir ? s : os;
    const int cc = fine.c;

    auto xv = x.data();
    std::vector<double> out(os.elems());
    std::vector<std::size_t> map(fine.elems()); // fine index -> coarse index
    for (int ni = 0; ni < fine.n; ++ni)
        for (int y = 0; y < fine.h; ++y)
            for (int xx = 0; xx < fine.w; ++xx)
                for (int c = 0; c < cc; ++c)
                    map[fine.index(ni, y, xx, c)] =
                        coarse.index(ni, y / r, xx / r, cc * r * (y % r) + cc * (xx % r) + c);

    if (forward_dir) {
        for (std::size_t i = 0; i < map.size(); ++i)
            out[i] = xv[map[i]];
    } else {
        for (std::size_t i = 0; i < map.size(); ++i)
            out[map[i]] = xv[i];
    }
    Tensor result = Tensor::from_data(os, std::move(out));

    OpArgs rec;
    int px = rec.arg(x);
    rec.finish(result, {px},
               [map = std::move(map), forward_dir](std::span<const double> g,
                                                   const std::vector<double*>& gp) {
                   if (!gp[0])
                       return;
                   if (forward_dir) {
                       for (std::size_t i = 0; i < map.size(); ++i)
                           gp[0][map[i]] += g[i];
                   } else {
                       for (std::size_t i = 0; i < map.size(); ++i)
                           gp[0][i] += g[map[i]];
                   }
               });
    return result;
}

} // namespace

Tensor pixel_shuffle(const Tensor& x, int r)
{
    return shuffle_permute(x, r, true);
}

Tensor pixel_unshuffle(const Tensor& x, int r)
{
    return shuffle_permute(x, r, false);
}

} // namespace avrfn
