// Copyright 2026 AVRFN Contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "core/model.hpp"

namespace avrfn {

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-7;
    double weight_decay = 0.0; // lambda of the L2 penalty 0.5*||theta||^2
    bool decoupled_decay = false; // apply the decay directly to the weights instead
};

// Bias-corrected Adam over a ModelParams registry. Moment arrays follow the
// registry order, which the checkpoint format preserves.
class Adam {
public:
    explicit Adam(const AdamConfig& cfg) : cfg_(cfg) {}

    void init(const ModelParams& params);
    bool initialized() const { return !m_.empty(); }

    void zero_grads(ModelParams& params);
    // one update; errors if a trainable parameter has no populated gradient
    void step(ModelParams& params);

    const AdamConfig& config() const { return cfg_; }
    std::int64_t step_count() const { return step_; }

    // checkpoint access
    std::vector<std::vector<double>>& moments_m() { return m_; }
    std::vector<std::vector<double>>& moments_v() { return v_; }
    const std::vector<std::vector<double>>& moments_m() const { return m_; }
    const std::vector<std::vector<double>>& moments_v() const { return v_; }
    void set_step_count(std::int64_t s) { step_ = s; }

private:
    AdamConfig cfg_;
    std::int64_t step_ = 0;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
};

} // namespace avrfn
