// Copyright 2026 AVRFN Contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "core/nn.hpp"
#include "core/soca.hpp"
#include "core/tensor.hpp"

namespace avrfn {

enum class Variant { ddrr, rrsoca, crcan, avrfn };

const char* variant_name(Variant v);
Variant variant_from_name(const std::string& name);

struct ModelSpec {
    Variant variant = Variant::avrfn;
    int groups = 3;
    int blocks_per_group = 6;
    int filters = 64;
    int scale = 4; // one of 2, 3, 4
    std::array<int, 3> dilation_rates{1, 2, 3};
    int gate_reduction = 16;
    int newton_schulz_iters = 5;
    uint64_t init_seed = 0;

    bool uses_dilated_branch() const
    {
        return variant == Variant::avrfn || variant == Variant::ddrr;
    }
    bool uses_gate() const { return variant != Variant::ddrr; }
    void validate() const;
};

// Ordered, uniquely named registry of every trainable tensor. The name set is
// a deterministic function of the spec, which the checkpoint format and the
// analyzer both rely on.
class ModelParams {
public:
    void add(const std::string& name, const Tensor& t);
    const Tensor* find(const std::string& name) const;
    const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }
    std::size_t count() const { return entries_.size(); }
    std::int64_t total_elements() const;

private:
    std::vector<std::pair<std::string, Tensor>> entries_;
};

struct BlockLayout {
    Variant variant = Variant::avrfn;
    std::vector<Conv2dParams> convs; // avrfn/ddrr: three dilated branches; others: two stacked convs
    Conv2dParams merge;              // avrfn/ddrr: 3F -> F fuse conv, no activation
    Conv2dParams post;               // ddrr: conv standing in for SOCA, no activation
    GateParams gate;                 // present unless ddrr
};

struct GroupLayout {
    std::vector<BlockLayout> blocks;
    Conv2dParams tail;
};

struct Model {
    ModelSpec spec;
    Conv2dParams head; // shallow feature conv, 1 -> F
    std::vector<GroupLayout> groups;
    Conv2dParams rir_tail;
    std::vector<Conv2dParams> upsample_stages; // scale 4 runs two x2 stages
    Conv2dParams output; // F -> 1
    ModelParams params;

    std::int64_t parameter_count() const { return params.total_elements(); }
};

Model build_model(const ModelSpec& spec);

Tensor residual_block(const Tensor& x, const BlockLayout& block, int ns_iters);
Tensor residual_group(const Tensor& x, const GroupLayout& group, int ns_iters);
Tensor rir_forward(const Tensor& x, const Model& m);
Tensor upsampler(const Tensor& x, const Model& m);
Tensor model_forward(const Model& m, const Tensor& lr_batch);

} // namespace avrfn
