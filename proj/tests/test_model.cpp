// Copyright 2026 AVRFN Contributors
// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"

#include <cmath>

#include "core/analyzer.hpp"
#include "core/model.hpp"
#include "support/test_support.hpp"

using namespace avrfn;
using namespace avrfn::test;

namespace {

ModelSpec tiny_spec(Variant v, int scale = 2)
{
    ModelSpec s;
    s.variant = v;
    s.groups = 1;
    s.blocks_per_group = 1;
    s.filters = 8;
    s.scale = scale;
    s.gate_reduction = 4;
    s.init_seed = 99;
    return s;
}

void zero_all_params(Model& m)
{
    for (const auto& [name, t] : m.params.entries()) {
        Tensor handle = t;
        handle.assign(std::vector<double>(t.size(), 0.0));
    }
}

} // namespace

TEST_CASE("default spec builds and matches the closed-form parameter count")
{
    ModelSpec spec; // avrfn, g=3, t=6, F=64, r=4
    Model m = build_model(spec);
    CHECK(m.parameter_count() == count_params(spec));
    CHECK(m.parameter_count() == analyze(spec).total_params);
}

TEST_CASE("same seed builds bit-identical parameters, different seeds differ")
{
    ModelSpec spec = tiny_spec(Variant::avrfn);
    Model a = build_model(spec);
    Model b = build_model(spec);
    REQUIRE(a.params.count() == b.params.count());
    for (std::size_t i = 0; i < a.params.count(); ++i) {
        const auto& [an, at] = a.params.entries()[i];
        const auto& [bn, bt] = b.params.entries()[i];
        CHECK(an == bn);
        for (std::size_t k = 0; k < at.size(); ++k)
            CHECK(at.data()[k] == bt.data()[k]);
    }

    spec.init_seed = 100;
    Model c = build_model(spec);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.params.count(); ++i) {
        const auto& at = a.params.entries()[i].second;
        const auto& ct = c.params.entries()[i].second;
        for (std::size_t k = 0; k < at.size(); ++k)
            any_diff |= at.data()[k] != ct.data()[k];
    }
    CHECK(any_diff);
}

TEST_CASE("minimal model maps (1,12,12,1) to the upscaled shape for every scale")
{
    Rng rng(1);
    for (int scale : {2, 3, 4}) {
        Model m = build_model(tiny_spec(Variant::avrfn, scale));
        Tensor x = random_tensor(rng, {1, 12, 12, 1}, 0.0, 1.0);
        Tensor y = model_forward(m, x);
        CHECK(y.shape() == Shape{1, 12 * scale, 12 * scale, 1});
    }
}

TEST_CASE("every variant's forward maps (n,h,w,1) to (n,h*r,w*r,1)")
{
    Rng rng(16);
    for (Variant v : {Variant::ddrr, Variant::rrsoca, Variant::crcan, Variant::avrfn}) {
        Model m = build_model(tiny_spec(v, 3));
        Tensor x = random_tensor(rng, {2, 8, 10, 1}, 0.0, 1.0);
        CHECK(model_forward(m, x).shape() == Shape{2, 24, 30, 1});
    }
}

TEST_CASE("invalid specs are rejected")
{
    ModelSpec s = tiny_spec(Variant::avrfn);
    s.scale = 5;
    CHECK_THROWS_AS(build_model(s), Error);

    s = tiny_spec(Variant::avrfn);
    s.dilation_rates = {1, 2, 2};
    CHECK_THROWS_AS(build_model(s), Error);

    s = tiny_spec(Variant::ddrr);
    s.dilation_rates = {1, 2, 1}; // only one rate above 1
    CHECK_THROWS_AS(build_model(s), Error);

    s = tiny_spec(Variant::rrsoca);
    s.gate_reduction = 3; // does not divide 8
    CHECK_THROWS_AS(build_model(s), Error);
}

TEST_CASE("zero-weight residual blocks are exact identity maps for all variants")
{
    Rng rng(2);
    for (Variant v : {Variant::ddrr, Variant::rrsoca, Variant::crcan, Variant::avrfn}) {
        CAPTURE(variant_name(v));
        Model m = build_model(tiny_spec(v));
        zero_all_params(m);
        Tensor x = random_tensor(rng, {2, 6, 6, 8});
        Tensor y = residual_block(x, m.groups[0].blocks[0], m.spec.newton_schulz_iters);
        CHECK(y.shape() == x.shape());
        for (std::size_t i = 0; i < x.size(); ++i)
            CHECK(y.data()[i] == x.data()[i]); // bit-exact skip dominance
    }
}

TEST_CASE("zero-weight groups and the zero-weight RIR body are identity maps")
{
    Rng rng(3);
    ModelSpec spec = tiny_spec(Variant::avrfn);
    spec.blocks_per_group = 2;
    spec.groups = 2;
    Model m = build_model(spec);
    zero_all_params(m);
    Tensor x = random_tensor(rng, {1, 6, 6, 8});

    Tensor yg = residual_group(x, m.groups[0], m.spec.newton_schulz_iters);
    for (std::size_t i = 0; i < x.size(); ++i)
        CHECK(yg.data()[i] == x.data()[i]);

    Tensor yr = rir_forward(x, m);
    for (std::size_t i = 0; i < x.size(); ++i)
        CHECK(yr.data()[i] == x.data()[i]);
}

TEST_CASE("shape preservation through the residual body for every variant")
{
    Rng rng(4);
    for (Variant v : {Variant::ddrr, Variant::rrsoca, Variant::crcan, Variant::avrfn}) {
        ModelSpec spec = tiny_spec(v);
        spec.groups = 2;
        spec.blocks_per_group = 2;
        Model m = build_model(spec);
        Tensor x = random_tensor(rng, {1, 7, 5, 8});
        CHECK(rir_forward(x, m).shape() == x.shape());
    }
}

TEST_CASE("the long skip is load-bearing on random weights")
{
    Rng rng(5);
    Model m = build_model(tiny_spec(Variant::avrfn));
    Tensor x = random_tensor(rng, {1, 6, 6, 8}, 0.1, 1.0);
    Tensor with_skip = rir_forward(x, m);

    Tensor h = x;
    for (const GroupLayout& group : m.groups)
        h = residual_group(h, group, m.spec.newton_schulz_iters);
    Tensor without_skip = conv2d(h, m.rir_tail);

    bool differs = false;
    for (std::size_t i = 0; i < x.size(); ++i)
        differs |= with_skip.data()[i] != without_skip.data()[i];
    CHECK(differs);
}

TEST_CASE("AVRFN residual block gradients pass finite differences")
{
    Rng rng(6);
    Model m = build_model(tiny_spec(Variant::avrfn));
    BlockLayout& block = m.groups[0].blocks[0];
    Tensor x = random_tensor(rng, {1, 6, 6, 8}, 0.1, 1.0);

    auto loss_for = [&](const BlockLayout& b) {
        Tensor y = residual_block(x, b, m.spec.newton_schulz_iters);
        return sum(mul(y, y));
    };

    // every trainable tensor of the block, swapped in one at a time
    std::vector<std::pair<std::string, std::function<BlockLayout(const Tensor&)>>> swaps;
    for (int i = 0; i < 3; ++i) {
        swaps.push_back({"branch" + std::to_string(i) + ".kernel", [&, i](const Tensor& t) {
                             BlockLayout b = block;
                             b.convs[std::size_t(i)].kernel = t;
                             return b;
                         }});
        swaps.push_back({"branch" + std::to_string(i) + ".bias", [&, i](const Tensor& t) {
                             BlockLayout b = block;
                             b.convs[std::size_t(i)].bias = t;
                             return b;
                         }});
    }
    swaps.push_back({"merge.kernel", [&](const Tensor& t) {
                         BlockLayout b = block;
                         b.merge.kernel = t;
                         return b;
                     }});
    swaps.push_back({"merge.bias", [&](const Tensor& t) {
                         BlockLayout b = block;
                         b.merge.bias = t;
                         return b;
                     }});
    swaps.push_back({"gate.w0.kernel", [&](const Tensor& t) {
                         BlockLayout b = block;
                         b.gate.w0.kernel = t;
                         return b;
                     }});
    swaps.push_back({"gate.w1.kernel", [&](const Tensor& t) {
                         BlockLayout b = block;
                         b.gate.w1.kernel = t;
                         return b;
                     }});

    for (auto& [name, swap] : swaps) {
        CAPTURE(name);
        const Tensor original = [&] {
            if (name.rfind("branch", 0) == 0) {
                int i = name[6] - '0';
                return name.find("kernel") != std::string::npos ? block.convs[std::size_t(i)].kernel
                                                                : block.convs[std::size_t(i)].bias;
            }
            if (name == "merge.kernel")
                return block.merge.kernel;
            if (name == "merge.bias")
                return block.merge.bias;
            if (name == "gate.w0.kernel")
                return block.gate.w0.kernel;
            return block.gate.w1.kernel;
        }();

        auto build = [&](const Tensor& t) { return loss_for(swap(t)); };
        auto got = recorded_grad(build, original);
        auto want = numeric_grad([&](const Tensor& t) { return build(t).item(); }, original);
        CHECK_MESSAGE(max_rel_err(got, want) < 1e-3, name);
    }
}

TEST_CASE("upsampler output shapes")
{
    Rng rng(7);
    Model m2 = build_model(tiny_spec(Variant::avrfn, 2));
    Tensor x24 = random_tensor(rng, {1, 24, 24, 8});
    CHECK(upsampler(x24, m2).shape() == Shape{1, 48, 48, 8});

    Model m3 = build_model(tiny_spec(Variant::avrfn, 3));
    CHECK(upsampler(x24, m3).shape() == Shape{1, 72, 72, 8});

    Model m4 = build_model(tiny_spec(Variant::avrfn, 4));
    Tensor x12 = random_tensor(rng, {1, 12, 12, 8});
    CHECK(upsampler(x12, m4).shape() == Shape{1, 48, 48, 8});
}

TEST_CASE("x4 upsampling equals two chained x2 stages with the same parameters")
{
    Rng rng(8);
    Model m4 = build_model(tiny_spec(Variant::avrfn, 4));
    Tensor x = random_tensor(rng, {1, 6, 6, 8});
    Tensor direct = upsampler(x, m4);
    Tensor staged =
        pixel_shuffle(conv2d(pixel_shuffle(conv2d(x, m4.upsample_stages[0]), 2),
                             m4.upsample_stages[1]),
                      2);
    for (std::size_t i = 0; i < direct.size(); ++i)
        CHECK(direct.data()[i] == staged.data()[i]); // bit-exact
}

TEST_CASE("closed-form parameter counts reproduce the published example")
{
    CHECK(conv_param_count({5, 1, 100, 64, true}) == 160064);
    CHECK(conv_param_count({3, 2, 100, 64, true}) == 57664);
    CHECK(conv_param_count({5, 1, 3, 64, true}) == 4864); // 64*(75+1)
    CHECK(conv_param_count({3, 1, 4, 4, false}) == 144);
}

TEST_CASE("compression ratio at matched receptive-field extent")
{
    const ConvConfig wide{5, 1, 100, 64, true};
    const ConvConfig dilated{3, 2, 100, 64, true};
    CHECK(rf_extent(wide) == 5);
    CHECK(rf_extent(dilated) == 5);
    CHECK(compression_ratio(wide, dilated) == doctest::Approx(2.776).epsilon(0.001 / 2.776));
    CHECK(compression_ratio(wide, wide) == 1.0);

    // k=7 dense vs k=3 with dilation 3: per-filter 49*64+1 vs 9*64+1
    const ConvConfig seven{7, 1, 64, 64, true};
    const ConvConfig three3{3, 3, 64, 64, true};
    CHECK(compression_ratio(seven, three3) ==
          doctest::Approx(3137.0 / 577.0).epsilon(1e-12));

    CHECK_THROWS_AS(compression_ratio(wide, {3, 1, 100, 64, true}), Error);
}

TEST_CASE("erf support of a single dilated conv is the dilated sample pattern")
{
    Conv2dParams p = init_conv({InitScheme::he_uniform, 11}, 3, 3, 1, 1, 2);
    auto net = [&](const Tensor& t) { return conv2d(t, p); };
    ErfReport rep = erf_map(net, 11, 11, 5, 5, 0, p.rf_extent());
    CHECK(rep.theoretical_extent == 5);

    int support = 0;
    for (int y = 0; y < 11; ++y)
        for (int x = 0; x < 11; ++x) {
            const bool expect = std::abs(y - 5) <= 2 && std::abs(x - 5) <= 2 &&
                                (y - 5) % 2 == 0 && (x - 5) % 2 == 0;
            CHECK(rep.nonzero_at(y, x) == expect);
            support += rep.nonzero_at(y, x);
        }
    CHECK(support == 9);
    CHECK(rep.area() == 9);
}

TEST_CASE("erf of a 5x5 conv covers the full 25-pixel window")
{
    Conv2dParams p = init_conv({InitScheme::he_uniform, 12}, 5, 5, 1, 1, 1);
    auto net = [&](const Tensor& t) { return conv2d(t, p); };
    ErfReport rep = erf_map(net, 11, 11, 5, 5, 0, p.rf_extent());
    CHECK(rep.theoretical_extent == 5);
    CHECK(rep.area(0.0) == 25); // every tap carries gradient
}

TEST_CASE("two stacked 3x3 convs compose to extent 5")
{
    Conv2dParams a = init_conv({InitScheme::he_uniform, 13}, 3, 3, 1, 2);
    Conv2dParams b = init_conv({InitScheme::he_uniform, 14}, 3, 3, 2, 1);
    auto net = [&](const Tensor& t) { return conv2d(conv2d(t, a), b); };
    ErfReport rep = erf_map(net, 11, 11, 5, 5, 0, 5);
    for (int y = 0; y < 11; ++y)
        for (int x = 0; x < 11; ++x)
            CHECK(rep.nonzero_at(y, x) == (std::abs(y - 5) <= 2 && std::abs(x - 5) <= 2));
}

TEST_CASE("AVRFN block extent is 9 and its erf stays inside the window")
{
    ModelSpec spec = tiny_spec(Variant::avrfn);
    AnalyzerReport rep = analyze(spec);
    CHECK(rep.block_rf_extent == 9);

    Model m = build_model(spec);
    const BlockLayout& block = m.groups[0].blocks[0];
    auto net = [&](const Tensor& t) {
        Tensor wide = concat_channels({t, t, t, t, t, t, t, t}); // 1 -> 8 channels
        return residual_block(wide, block, spec.newton_schulz_iters);
    };
    ErfReport erf = erf_map(net, 15, 15, 7, 7, 0, 9);
    for (int y = 0; y < 15; ++y)
        for (int x = 0; x < 15; ++x) {
            if (std::abs(y - 7) > 4 || std::abs(x - 7) > 4)
                CHECK_FALSE(erf.nonzero_at(y, x));
        }
}

TEST_CASE("analyzer totals match built models for all variants and scales")
{
    for (Variant v : {Variant::ddrr, Variant::rrsoca, Variant::crcan, Variant::avrfn})
        for (int scale : {2, 3, 4}) {
            ModelSpec spec = tiny_spec(v, scale);
            spec.groups = 2;
            spec.blocks_per_group = 3;
            CAPTURE(variant_name(v));
            CAPTURE(scale);
            CHECK(build_model(spec).parameter_count() == count_params(spec));
        }
}

TEST_CASE("DDRR and AVRFN differ exactly by gates versus replacement convs")
{
    ModelSpec av; // defaults: avrfn g=3 t=6 F=64
    ModelSpec dd = av;
    dd.variant = Variant::ddrr;
    AnalyzerReport ra = analyze(av);
    AnalyzerReport rd = analyze(dd);
    CHECK(ra.gate_params > 0);
    CHECK(rd.block_post_params > 0);
    CHECK(ra.total_params - rd.total_params == ra.gate_params - rd.block_post_params);

    // per-block gate cost at the default width: 64->4->64 with biases
    CHECK(ra.gate_params == 18 * (64 * 4 + 4 + 4 * 64 + 64));
}

TEST_CASE("tiny full-model gradients spot-checked against finite differences")
{
    Rng rng(15);
    ModelSpec spec = tiny_spec(Variant::avrfn, 2);
    Model m = build_model(spec);
    Tensor x = random_tensor(rng, {1, 6, 6, 1}, 0.0, 1.0);
    Tensor target = random_tensor(rng, {1, 12, 12, 1}, 0.0, 1.0);

    auto loss_value = [&]() {
        Tensor pred = model_forward(m, x);
        Tensor d = sub(pred, target);
        return mean(mul(d, d)).item();
    };

    // recorded gradients for every parameter
    for (const auto& [name, t] : m.params.entries()) {
        Tensor h = t;
        h.zero_grad();
    }
    Graph g;
    Tensor loss;
    {
        Graph::Recording rec(g);
        Tensor pred = model_forward(m, x);
        Tensor d = sub(pred, target);
        loss = mean(mul(d, d));
    }
    g.backward(loss);

    // 20 random (parameter, element) probes
    const double eps = 1e-5;
    for (int probe = 0; probe < 20; ++probe) {
        const auto& [name, t] = m.params.entries()[rng.below(m.params.count())];
        const std::size_t elem = rng.below(t.size());
        CAPTURE(name);
        CAPTURE(elem);

        std::vector<double> original(t.data().begin(), t.data().end());
        Tensor h = t;
        std::vector<double> bumped = original;
        bumped[elem] = original[elem] + eps;
        h.assign(bumped);
        const double up = loss_value();
        bumped[elem] = original[elem] - eps;
        h.assign(bumped);
        const double down = loss_value();
        h.assign(original);

        const double numeric = (up - down) / (2 * eps);
        CHECK(rel_err(t.grad()[elem], numeric) < 1e-3);
    }
}
