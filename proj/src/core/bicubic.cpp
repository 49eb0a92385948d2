// Copyright 2026 AVRFN Contributors
// SPDX-License-Identifier: Apache-2.0

#include "core/bicubic.hpp"

#include <algorithm>
#include <cmath>

namespace avrfn {

double bicubic_kernel(double x)
{
    constexpr double a = -0.5;
    const double ax = std::abs(x);
    if (ax <= 1.0)
        return ((a + 2.0) * ax - (a + 3.0)) * ax * ax + 1.0;
    if (ax < 2.0)
        return (((ax - 5.0) * ax + 8.0) * ax - 4.0) * a;
    return 0.0;
}

std::array<double, 4> bicubic_weights(double frac)
{
    return {bicubic_kernel(frac + 1.0), bicubic_kernel(frac), bicubic_kernel(frac - 1.0),
            bicubic_kernel(frac - 2.0)};
}

namespace {

struct TapPlan {
    std::array<int, 4> idx;
    std::array<double, 4> w;
};

// per-output-coordinate taps along one axis, edges clamped
std::vector<TapPlan> plan_axis(int in_size, int out_size)
{
    std::vector<TapPlan> plan(out_size);
    const double step = double(in_size) / double(out_size);
    for (int o = 0; o < out_size; ++o) {
        const double src = (o + 0.5) * step - 0.5;
        const double base = std::floor(src);
        const double frac = src - base;
        TapPlan& p = plan[o];
        p.w = bicubic_weights(frac);
        for (int k = 0; k < 4; ++k)
            p.idx[k] = std::clamp(int(base) + k - 1, 0, in_size - 1);
    }
    return plan;
}

} // namespace

GrayImage bicubic_resize(const GrayImage& img, int out_w, int out_h)
{
    require(out_w >= 1 && out_h >= 1, ErrorCode::invalid_argument,
            "bicubic_resize: output dimensions must be positive");
    require(!img.empty(), ErrorCode::invalid_argument, "bicubic_resize: empty image");

    const auto xplan = plan_axis(img.width, out_w);
    const auto yplan = plan_axis(img.height, out_h);

    // horizontal pass
    GrayImage tmp = make_image(out_w, img.height, img.max_value);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < out_w; ++x) {
            const TapPlan& p = xplan[x];
            double acc = 0.0;
            for (int k = 0; k < 4; ++k)
                acc += p.w[k] * img.at(y, p.idx[k]);
            tmp.at(y, x) = acc;
        }
    }
    // vertical pass
    GrayImage out = make_image(out_w, out_h, img.max_value);
    for (int y = 0; y < out_h; ++y) {
        const TapPlan& p = yplan[y];
        for (int x = 0; x < out_w; ++x) {
            double acc = 0.0;
            for (int k = 0; k < 4; ++k)
                acc += p.w[k] * tmp.at(p.idx[k], x);
            out.at(y, x) = acc;
        }
    }
    return out;
}

} // namespace avrfn
