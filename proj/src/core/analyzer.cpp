// Copyright 2026 AVRFN Contributors
// SPDX-License-Identifier: Apache-2.0

#include "core/analyzer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "core/rng.hpp"

namespace avrfn {

std::int64_t conv_param_count(const ConvConfig& c)
{
    std::int64_t k = std::int64_t(c.kernel) * c.kernel * c.in_ch * c.out_ch;
    return c.bias ? k + c.out_ch : k;
}

int rf_extent(const ConvConfig& c)
{
    return c.dilation * (c.kernel - 1) + 1;
}

double compression_ratio(const ConvConfig& a, const ConvConfig& b)
{
    require(rf_extent(a) == rf_extent(b), ErrorCode::invalid_argument,
            "compression_ratio: receptive-field extents differ (" +
                std::to_string(rf_extent(a)) + " vs " + std::to_string(rf_extent(b)) + ")");
    return double(conv_param_count(a)) / double(conv_param_count(b));
}

namespace {

struct Walk {
    AnalyzerReport& rep;
    double rf = 1.0;     // cumulative extent in input pixels
    double px_size = 1.0; // size of one current-resolution pixel in input pixels

    void conv(const std::string& name, int k, int dil, int in_ch, int out_ch,
              bool advances_rf = true)
    {
        ConvConfig c{k, dil, in_ch, out_ch, true};
        double after = advances_rf ? rf + (rf_extent(c) - 1) * px_size : rf;
        if (advances_rf)
            rf = after;
        rep.rows.push_back({name, k, dil, in_ch, out_ch, conv_param_count(c), rf});
        rep.total_params += conv_param_count(c);
    }
};

} // namespace

AnalyzerReport analyze(const ModelSpec& spec)
{
    spec.validate();
    AnalyzerReport rep;
    rep.variant = spec.variant;
    rep.scale = spec.scale;
    const int f = spec.filters;

    // conv-path extent of one residual block (gate convs are 1x1 on pooled stats)
    if (spec.uses_dilated_branch()) {
        int branch = 0;
        for (int r : spec.dilation_rates)
            branch = std::max(branch, rf_extent({3, r, f, f, true}));
        rep.block_rf_extent = branch + 2; // merge conv
        if (spec.variant == Variant::ddrr)
            rep.block_rf_extent += 2; // replacement conv
    } else {
        const int d1 = spec.variant == Variant::crcan ? 2 : 1;
        rep.block_rf_extent = 3 + 2 * d1; // two stacked 3x3 convs
    }

    Walk walk{rep};
    walk.conv("head", 3, 1, 1, f);
    for (int gi = 0; gi < spec.groups; ++gi) {
        const std::string gp = "g" + std::to_string(gi);
        for (int bi = 0; bi < spec.blocks_per_group; ++bi) {
            const std::string bp = gp + ".b" + std::to_string(bi);
            if (spec.uses_dilated_branch()) {
                // parallel branches: only the widest advances the cumulative extent
                int widest = 0;
                for (int i = 1; i < 3; ++i)
                    if (spec.dilation_rates[i] > spec.dilation_rates[widest])
                        widest = i;
                for (int i = 0; i < 3; ++i)
                    walk.conv(bp + ".branch" + std::to_string(i), 3, spec.dilation_rates[i], f, f,
                              i == widest);
                walk.conv(bp + ".merge", 3, 1, 3 * f, f);
                if (spec.variant == Variant::ddrr) {
                    walk.conv(bp + ".post", 3, 1, f, f);
                    rep.block_post_params +=
                        conv_param_count({3, 1, f, f, true});
                }
            } else {
                const int d1 = spec.variant == Variant::crcan ? 2 : 1;
                walk.conv(bp + ".conv0", 3, 1, f, f);
                walk.conv(bp + ".conv1", 3, d1, f, f);
            }
            if (spec.uses_gate()) {
                const int hidden = f / spec.gate_reduction;
                walk.conv(bp + ".gate.w0", 1, 1, f, hidden, false);
                walk.conv(bp + ".gate.w1", 1, 1, hidden, f, false);
                rep.gate_params += conv_param_count({1, 1, f, hidden, true}) +
                                   conv_param_count({1, 1, hidden, f, true});
            }
        }
        walk.conv(gp + ".tail", 3, 1, f, f);
    }
    walk.conv("rir.tail", 3, 1, f, f);

    if (spec.scale == 4) {
        walk.conv("up0", 3, 1, f, 4 * f);
        walk.px_size /= 2.0;
        walk.conv("up1", 3, 1, f, 4 * f);
        walk.px_size /= 2.0;
    } else {
        walk.conv("up0", 3, 1, f, spec.scale * spec.scale * f);
        walk.px_size /= double(spec.scale);
    }
    walk.conv("out", 3, 1, f, 1);
    rep.rf_extent = walk.rf;
    return rep;
}

std::int64_t count_params(const ModelSpec& spec)
{
    return analyze(spec).total_params;
}

std::string AnalyzerReport::text() const
{
    std::ostringstream os;
    os << "variant " << variant_name(variant) << ", scale x" << scale << "\n";
    char line[160];
    std::snprintf(line, sizeof(line), "%-20s %6s %8s %6s %7s %10s %8s\n", "layer", "kernel",
                  "dilation", "in", "out", "params", "rf");
    os << line;
    for (const LayerRow& r : rows) {
        std::snprintf(line, sizeof(line), "%-20s %6d %8d %6d %7d %10lld %8.1f\n", r.name.c_str(),
                      r.kernel, r.dilation, r.in_ch, r.out_ch, (long long)r.params, r.rf_after);
        os << line;
    }
    os << "total parameters: " << total_params << "\n";
    os << "gate parameters:  " << gate_params << "\n";
    if (block_post_params > 0)
        os << "block post-conv parameters: " << block_post_params << "\n";
    os << "residual-block rf extent: " << block_rf_extent << "\n";
    os << "main-path rf extent (input px): " << rf_extent << "\n";
    return os.str();
}

std::string AnalyzerReport::csv() const
{
    std::ostringstream os;
    os << "layer,kernel,dilation,in_ch,out_ch,params,rf\n";
    for (const LayerRow& r : rows)
        os << r.name << ',' << r.kernel << ',' << r.dilation << ',' << r.in_ch << ',' << r.out_ch
           << ',' << r.params << ',' << r.rf_after << "\n";
    return os.str();
}

double ErfReport::max_magnitude() const
{
    double m = 0.0;
    for (double v : gradient_magnitude)
        m = std::max(m, v);
    return m;
}

int ErfReport::area(double tau) const
{
    const double cut = tau * max_magnitude();
    int n = 0;
    for (double v : gradient_magnitude)
        if (v > cut)
            ++n;
    return n;
}

bool ErfReport::nonzero_at(int y, int x) const
{
    return gradient_magnitude[std::size_t(y) * input_w + x] != 0.0;
}

ErfReport erf_map(const std::function<Tensor(const Tensor&)>& net, int in_h, int in_w, int out_y,
                  int out_x, int out_c, int theoretical_extent)
{
    // random probe input keeps activations away from kink points
    Rng rng(0x9d2c5680);
    std::vector<double> probe_in(std::size_t(in_h) * in_w);
    for (double& v : probe_in)
        v = rng.uniform(0.1, 0.9);
    Tensor input = Tensor::from_data({1, in_h, in_w, 1}, std::move(probe_in), true);
    Graph g;
    Tensor probe;
    {
        Graph::Recording rec(g);
        Tensor out = net(input);
        const Shape os = out.shape();
        require(out_y >= 0 && out_y < os.h && out_x >= 0 && out_x < os.w && out_c >= 0 &&
                    out_c < os.c,
                ErrorCode::invalid_argument, "erf_map: output unit out of bounds for " + os.str());
        probe = pick(out, 0, out_y, out_x, out_c);
    }
    g.backward(probe);

    ErfReport rep;
    rep.theoretical_extent = theoretical_extent;
    rep.input_h = in_h;
    rep.input_w = in_w;
    rep.gradient_magnitude.resize(std::size_t(in_h) * in_w);
    auto gr = input.grad();
    for (std::size_t i = 0; i < rep.gradient_magnitude.size(); ++i)
        rep.gradient_magnitude[i] = std::abs(gr[i]);
    return rep;
}

} // namespace avrfn
