// Copyright 2026 AVRFN Contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

namespace avrfn {

// B (K x N) repacked into zero-padded K x 16 column tiles so the panel kernel
// reads rows with a compile-time stride. Pack once, multiply many times.
struct PackedB {
    std::vector<double> tiles;
    int k = 0;
    int n = 0;
};

void pack_b(int k, int n, const double* b, PackedB& out);

// C (M x N) = A (M x K) * B with B pre-packed; accumulate adds into C.
void gemm_packed(int m, const double* a, const PackedB& b, double* c, bool accumulate);

// C (M x N) = A (M x K) * B (K x N), all row-major and contiguous.
void gemm(int m, int k, int n, const double* a, const double* b, double* c, bool accumulate);

// dB (K x N) += A^T * G for A (M x K) and G (M x N), row-major.
void gemm_at_accumulate(int m, int k, int n, const double* a, const double* g, double* db);

// row-block size the panel kernel works in; conv gathers its tap blocks at
// this granularity so they stay cache-hot
inline constexpr int kGemmRowBlock = 14;

} // namespace avrfn
