// Copyright 2026 AVRFN Contributors
// SPDX-License-Identifier: Apache-2.0

#include "core/model.hpp"

#include <algorithm>

#include "core/rng.hpp"

namespace avrfn {

const char* variant_name(Variant v)
{
    switch (v) {
    case Variant::ddrr: return "ddrr";
    case Variant::rrsoca: return "rrsoca";
    case Variant::crcan: return "crcan";
    case Variant::avrfn: return "avrfn";
    }
    return "?";
}

Variant variant_from_name(const std::string& name)
{
    if (name == "ddrr")
        return Variant::ddrr;
    if (name == "rrsoca")
        return Variant::rrsoca;
    if (name == "crcan")
        return Variant::crcan;
    if (name == "avrfn")
        return Variant::avrfn;
    fail(ErrorCode::invalid_argument, "unknown variant '" + name + "'");
}

void ModelSpec::validate() const
{
    require(groups >= 1 && blocks_per_group >= 1 && filters >= 1, ErrorCode::invalid_argument,
            "model spec: groups, blocks and filters must be positive");
    require(scale == 2 || scale == 3 || scale == 4, ErrorCode::invalid_argument,
            "model spec: scale must be 2, 3 or 4");
    require(newton_schulz_iters >= 1, ErrorCode::invalid_argument,
            "model spec: newton_schulz_iters must be >= 1");
    if (uses_dilated_branch()) {
        auto r = dilation_rates;
        require(r[0] >= 1 && r[1] >= 1 && r[2] >= 1, ErrorCode::invalid_argument,
                "model spec: dilation rates must be >= 1");
        require(r[0] != r[1] && r[0] != r[2] && r[1] != r[2], ErrorCode::invalid_argument,
                "model spec: dilation rates must be pairwise distinct");
        int above_one = int(r[0] > 1) + int(r[1] > 1) + int(r[2] > 1);
        require(above_one >= 2, ErrorCode::invalid_argument,
                "model spec: at least two dilation rates must exceed 1");
    }
    if (uses_gate()) {
        require(gate_reduction >= 1 && filters % gate_reduction == 0, ErrorCode::invalid_argument,
                "model spec: gate reduction must divide the filter count");
    }
}

void ModelParams::add(const std::string& name, const Tensor& t)
{
    require(find(name) == nullptr, ErrorCode::internal, "duplicate parameter name " + name);
    entries_.emplace_back(name, t);
}

const Tensor* ModelParams::find(const std::string& name) const
{
    for (const auto& [n, t] : entries_)
        if (n == name)
            return &t;
    return nullptr;
}

std::int64_t ModelParams::total_elements() const
{
    std::int64_t total = 0;
    for (const auto& [n, t] : entries_)
        total += std::int64_t(t.size());
    return total;
}

namespace {

struct Builder {
    ModelParams& params;
    uint64_t master_seed;
    uint64_t counter = 0;

    Conv2dParams conv(const std::string& name, int k, int in_ch, int out_ch, int dilation = 1)
    {
        Conv2dParams p = init_conv({InitScheme::he_uniform, derive_seed(master_seed, counter++)},
                                   k, k, in_ch, out_ch, dilation);
        params.add(name + ".kernel", p.kernel);
        params.add(name + ".bias", p.bias);
        return p;
    }

    GateParams gate(const std::string& name, int channels, int reduction)
    {
        GateParams g = init_gate(derive_seed(master_seed, counter++), channels, reduction);
        params.add(name + ".w0.kernel", g.w0.kernel);
        params.add(name + ".w0.bias", g.w0.bias);
        params.add(name + ".w1.kernel", g.w1.kernel);
        params.add(name + ".w1.bias", g.w1.bias);
        return g;
    }
};

BlockLayout build_block(Builder& b, const std::string& prefix, const ModelSpec& spec)
{
    BlockLayout block;
    block.variant = spec.variant;
    const int f = spec.filters;
    if (spec.uses_dilated_branch()) {
        for (int i = 0; i < 3; ++i)
            block.convs.push_back(
                b.conv(prefix + ".branch" + std::to_string(i), 3, f, f, spec.dilation_rates[i]));
        block.merge = b.conv(prefix + ".merge", 3, 3 * f, f);
        if (spec.variant == Variant::ddrr)
            block.post = b.conv(prefix + ".post", 3, f, f);
    } else {
        const int d1 = spec.variant == Variant::crcan ? 2 : 1;
        block.convs.push_back(b.conv(prefix + ".conv0", 3, f, f, 1));
        block.convs.push_back(b.conv(prefix + ".conv1", 3, f, f, d1));
    }
    if (spec.uses_gate())
        block.gate = b.gate(prefix + ".gate", f, spec.gate_reduction);
    return block;
}

} // namespace

Model build_model(const ModelSpec& spec)
{
    spec.validate();
    Model m;
    m.spec = spec;
    Builder b{m.params, spec.init_seed};
    const int f = spec.filters;

    m.head = b.conv("head", 3, 1, f);
    for (int gi = 0; gi < spec.groups; ++gi) {
        GroupLayout group;
        const std::string gp = "g" + std::to_string(gi);
        for (int bi = 0; bi < spec.blocks_per_group; ++bi)
            group.blocks.push_back(build_block(b, gp + ".b" + std::to_string(bi), spec));
        group.tail = b.conv(gp + ".tail", 3, f, f);
        m.groups.push_back(std::move(group));
    }
    m.rir_tail = b.conv("rir.tail", 3, f, f);

    if (spec.scale == 4) {
        m.upsample_stages.push_back(b.conv("up0", 3, f, 4 * f));
        m.upsample_stages.push_back(b.conv("up1", 3, f, 4 * f));
    } else {
        m.upsample_stages.push_back(b.conv("up0", 3, f, spec.scale * spec.scale * f));
    }
    m.output = b.conv("out", 3, f, 1);
    return m;
}

Tensor residual_block(const Tensor& x, const BlockLayout& block, int ns_iters)
{
    switch (block.variant) {
    case Variant::avrfn: {
        Tensor merged = conv2d(concat_channels({conv2d(x, block.convs[0]),
                                                conv2d(x, block.convs[1]),
                                                conv2d(x, block.convs[2])}),
                               block.merge);
        return add(x, soca_apply(merged, block.gate, ns_iters));
    }
    case Variant::ddrr: {
        Tensor merged = conv2d(concat_channels({conv2d(x, block.convs[0]),
                                                conv2d(x, block.convs[1]),
                                                conv2d(x, block.convs[2])}),
                               block.merge);
        return add(x, conv2d(merged, block.post));
    }
    case Variant::rrsoca:
    case Variant::crcan: {
        Tensor h = relu(conv2d(relu(conv2d(x, block.convs[0])), block.convs[1]));
        return add(x, soca_apply(h, block.gate, ns_iters));
    }
    }
    fail(ErrorCode::internal, "unreachable variant");
}

Tensor residual_group(const Tensor& x, const GroupLayout& group, int ns_iters)
{
    Tensor h = x;
    for (const BlockLayout& block : group.blocks)
        h = residual_block(h, block, ns_iters);
    return add(x, conv2d(h, group.tail));
}

Tensor rir_forward(const Tensor& x, const Model& m)
{
    Tensor h = x;
    for (const GroupLayout& group : m.groups)
        h = residual_group(h, group, m.spec.newton_schulz_iters);
    return add(x, conv2d(h, m.rir_tail));
}

Tensor upsampler(const Tensor& x, const Model& m)
{
    Tensor h = x;
    if (m.spec.scale == 4) {
        h = pixel_shuffle(conv2d(h, m.upsample_stages[0]), 2);
        h = pixel_shuffle(conv2d(h, m.upsample_stages[1]), 2);
    } else {
        h = pixel_shuffle(conv2d(h, m.upsample_stages[0]), m.spec.scale);
    }
    return h;
}

Tensor model_forward(const Model& m, const Tensor& lr_batch)
{
    require(lr_batch.shape().c == 1, ErrorCode::shape_mismatch,
            "model_forward: expects single-channel input, got " + lr_batch.shape().str());
    Tensor shallow = conv2d(lr_batch, m.head);
    Tensor body = rir_forward(shallow, m);
    return conv2d(upsampler(body, m), m.output);
}

} // namespace avrfn
