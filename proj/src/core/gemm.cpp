// Copyright 2026 AVRFN Contributors
// SPDX-License-Identifier: Apache-2.0

#include "core/gemm.hpp"

#include <algorithm>
#include <cstring>

namespace avrfn {

namespace {

// 8-double SIMD lane; the compiler lowers it to the widest unit available.
typedef double v8d __attribute__((vector_size(64), aligned(8)));

inline v8d load8(const double* p)
{
    v8d v;
    __builtin_memcpy(&v, p, sizeof(v));
    return v;
}

inline void store8(double* p, v8d v)
{
    __builtin_memcpy(p, &v, sizeof(v));
}

constexpr int kColBlock = 16;

// C[IB x 16] panel against one packed B tile. The accumulator tile lives in
// registers across the whole K loop; restrict qualifiers and int strides are
// both required for the compiler to keep it there.
template <int IB, bool Accumulate>
void panel(int k, int lda, int ldc, const double* __restrict a, const double* __restrict bp,
           double* __restrict c)
{
    v8d acc[IB][2];
    for (int i = 0; i < IB; ++i) {
        if (Accumulate) {
            acc[i][0] = load8(c + (long)i * ldc);
            acc[i][1] = load8(c + (long)i * ldc + 8);
        } else {
            acc[i][0] = v8d{};
            acc[i][1] = v8d{};
        }
    }
    for (int l = 0; l < k; ++l) {
        const v8d b0 = load8(bp + (long)l * kColBlock);
        const v8d b1 = load8(bp + (long)l * kColBlock + 8);
        for (int i = 0; i < IB; ++i) {
            const double s = a[(long)i * lda + l];
            acc[i][0] += s * b0;
            acc[i][1] += s * b1;
        }
    }
    for (int i = 0; i < IB; ++i) {
        store8(c + (long)i * ldc, acc[i][0]);
        store8(c + (long)i * ldc + 8, acc[i][1]);
    }
}

// leftover rows/columns against a packed tile, writing jb valid columns
void panel_small(int ib, int jb, int k, int lda, int ldc, const double* __restrict a,
                 const double* __restrict bp, double* __restrict c, bool accumulate)
{
    for (int i = 0; i < ib; ++i) {
        double* __restrict crow = c + (long)i * ldc;
        if (!accumulate) {
            for (int j = 0; j < jb; ++j)
                crow[j] = 0.0;
        }
        const double* __restrict arow = a + (long)i * lda;
        for (int l = 0; l < k; ++l) {
            const double av = arow[l];
            const double* __restrict brow = bp + (long)l * kColBlock;
            for (int j = 0; j < jb; ++j)
                crow[j] += av * brow[j];
        }
    }
}

} // namespace

void pack_b(int k, int n, const double* b, PackedB& out)
{
    const int tiles = (n + kColBlock - 1) / kColBlock;
    out.k = k;
    out.n = n;
    out.tiles.assign(std::size_t(tiles) * k * kColBlock, 0.0);
    for (int t = 0; t < tiles; ++t) {
        const int j0 = t * kColBlock;
        const int jb = std::min(kColBlock, n - j0);
        double* tile = out.tiles.data() + std::size_t(t) * k * kColBlock;
        for (int l = 0; l < k; ++l)
            std::memcpy(tile + (long)l * kColBlock, b + (std::size_t)l * n + j0,
                        std::size_t(jb) * sizeof(double));
    }
}

void gemm_packed(int m, const double* a, const PackedB& b, double* c, bool accumulate)
{
    constexpr int IB = kGemmRowBlock;
    const int k = b.k, n = b.n;
    const int tiles = (n + kColBlock - 1) / kColBlock;
    for (int t = 0; t < tiles; ++t) {
        const int j0 = t * kColBlock;
        const int jb = std::min(kColBlock, n - j0);
        const double* tile = b.tiles.data() + std::size_t(t) * k * kColBlock;
        int i0 = 0;
        if (jb == kColBlock) {
            for (; i0 + IB <= m; i0 += IB) {
                const double* ap = a + (long)i0 * k;
                double* cp = c + (long)i0 * n + j0;
                if (accumulate)
                    panel<IB, true>(k, k, n, ap, tile, cp);
                else
                    panel<IB, false>(k, k, n, ap, tile, cp);
            }
        }
        if (i0 < m)
            panel_small(m - i0, jb, k, k, n, a + (long)i0 * k, tile, c + (long)i0 * n + j0,
                        accumulate);
    }
}

void gemm(int m, int k, int n, const double* a, const double* b, double* c, bool accumulate)
{
    thread_local PackedB pack;
    pack_b(k, n, b, pack);
    gemm_packed(m, a, pack, c, accumulate);
}

void gemm_at_accumulate(int m, int k, int n, const double* a, const double* g, double* db)
{
    // db stays cache-resident: K*N is small for every layer in this kit
    for (int row = 0; row < m; ++row) {
        const double* __restrict arow = a + (long)row * k;
        const double* __restrict grow = g + (long)row * n;
        for (int l = 0; l < k; ++l) {
            const double av = arow[l];
            double* __restrict dbrow = db + (long)l * n;
            for (int j = 0; j < n; ++j)
                dbrow[j] += av * grow[j];
        }
    }
}

} // namespace avrfn
