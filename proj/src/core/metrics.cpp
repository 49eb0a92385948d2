// Copyright 2026 AVRFN Contributors
// SPDX-License-Identifier: Apache-2.0

#include "core/metrics.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace avrfn {

namespace {

void check_same_dims(const GrayImage& a, const GrayImage& b, const char* what)
{
    require(a.width == b.width && a.height == b.height, ErrorCode::shape_mismatch,
            std::string(what) + ": image dimensions differ");
}

std::string format_value(double v)
{
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os.precision(6);
    os << std::fixed << v;
    return os.str();
}

} // namespace

double psnr(const GrayImage& a, const GrayImage& b)
{
    check_same_dims(a, b, "psnr");
    double mse = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) {
        const double d = a.pixels[i] - b.pixels[i];
        mse += d * d;
    }
    mse /= double(a.pixels.size());
    if (mse == 0.0)
        return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

double ssim(const GrayImage& a, const GrayImage& b)
{
    check_same_dims(a, b, "ssim");
    constexpr int kWindow = 11;
    constexpr double kSigma = 1.5;
    constexpr double kC1 = 0.01 * 0.01;
    constexpr double kC2 = 0.03 * 0.03;
    require(a.width >= kWindow && a.height >= kWindow, ErrorCode::invalid_argument,
            "ssim: image smaller than the 11x11 window");

    double w[kWindow][kWindow];
    double wsum = 0.0;
    for (int y = 0; y < kWindow; ++y)
        for (int x = 0; x < kWindow; ++x) {
            const double dy = y - kWindow / 2, dx = x - kWindow / 2;
            w[y][x] = std::exp(-(dx * dx + dy * dy) / (2.0 * kSigma * kSigma));
            wsum += w[y][x];
        }
    for (auto& row : w)
        for (double& v : row)
            v /= wsum;

    double total = 0.0;
    std::size_t count = 0;
    for (int y0 = 0; y0 + kWindow <= a.height; ++y0) {
        for (int x0 = 0; x0 + kWindow <= a.width; ++x0) {
            double ma = 0, mb = 0;
            for (int y = 0; y < kWindow; ++y)
                for (int x = 0; x < kWindow; ++x) {
                    ma += w[y][x] * a.at(y0 + y, x0 + x);
                    mb += w[y][x] * b.at(y0 + y, x0 + x);
                }
            double va = 0, vb = 0, cov = 0;
            for (int y = 0; y < kWindow; ++y)
                for (int x = 0; x < kWindow; ++x) {
                    const double da = a.at(y0 + y, x0 + x) - ma;
                    const double db = b.at(y0 + y, x0 + x) - mb;
                    va += w[y][x] * da * da;
                    vb += w[y][x] * db * db;
                    cov += w[y][x] * da * db;
                }
            total += ((2 * ma * mb + kC1) * (2 * cov + kC2)) /
                     ((ma * ma + mb * mb + kC1) * (va + vb + kC2));
            ++count;
        }
    }
    return total / double(count);
}

void MetricReport::finalize()
{
    const std::size_t n = per_image.size();
    psnr_mean = psnr_std = ssim_mean = ssim_std = 0.0;
    if (n == 0)
        return;
    for (const ImageScore& s : per_image) {
        psnr_mean += s.psnr;
        ssim_mean += s.ssim;
    }
    psnr_mean /= double(n);
    ssim_mean /= double(n);
    for (const ImageScore& s : per_image) {
        psnr_std += (s.psnr - psnr_mean) * (s.psnr - psnr_mean);
        ssim_std += (s.ssim - ssim_mean) * (s.ssim - ssim_mean);
    }
    psnr_std = std::sqrt(psnr_std / double(n));
    ssim_std = std::sqrt(ssim_std / double(n));
    if (std::isnan(psnr_std)) // inf mean makes the deviation undefined
        psnr_std = 0.0;
}

std::string metrics_csv_header()
{
    return "test_set,scale,parameters,psnr,ssim,psnr_std,ssim_std";
}

std::string metrics_csv_row(const MetricReport& r)
{
    std::ostringstream os;
    os << r.test_set << ',' << r.scale << ',' << r.parameters << ',' << format_value(r.psnr_mean)
       << ',' << format_value(r.ssim_mean) << ',' << format_value(r.psnr_std) << ','
       << format_value(r.ssim_std);
    return os.str();
}

void write_metrics_csv(const std::string& path, const std::vector<MetricReport>& reports)
{
    std::ofstream f(path, std::ios::trunc);
    require(f.good(), ErrorCode::io, "cannot write '" + path + "'");
    f << metrics_csv_header() << "\n";
    for (const MetricReport& r : reports)
        f << metrics_csv_row(r) << "\n";
    require(f.good(), ErrorCode::io, "short write to '" + path + "'");
}

void write_per_image_csv(const std::string& path, const MetricReport& r)
{
    std::ofstream f(path, std::ios::trunc);
    require(f.good(), ErrorCode::io, "cannot write '" + path + "'");
    f << "image,psnr,ssim\n";
    for (const ImageScore& s : r.per_image)
        f << s.id << ',' << format_value(s.psnr) << ',' << format_value(s.ssim) << "\n";
    require(f.good(), ErrorCode::io, "short write to '" + path + "'");
}

} // namespace avrfn
