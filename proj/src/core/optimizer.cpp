// Copyright 2026 AVRFN Contributors
// SPDX-License-Identifier: Apache-2.0

#include "core/optimizer.hpp"

#include <cmath>

namespace avrfn {

void Adam::init(const ModelParams& params)
{
    m_.clear();
    v_.clear();
    step_ = 0;
    for (const auto& [name, t] : params.entries()) {
        m_.emplace_back(t.size(), 0.0);
        v_.emplace_back(t.size(), 0.0);
    }
}

void Adam::zero_grads(ModelParams& params)
{
    for (const auto& [name, t] : params.entries()) {
        Tensor handle = t; // copies share storage
        handle.zero_grad();
    }
}

void Adam::step(ModelParams& params)
{
    require(initialized(), ErrorCode::internal, "Adam::step before init");
    require(m_.size() == params.count(), ErrorCode::internal,
            "Adam::step: optimizer state does not match the parameter set");
    ++step_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, double(step_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, double(step_));

    std::size_t idx = 0;
    std::vector<double> updated;
    for (const auto& [name, t] : params.entries()) {
        require(t.has_grad(), ErrorCode::invalid_argument,
                "Adam::step: parameter '" + name + "' has no gradient");
        auto g = t.grad();
        auto val = t.data();
        auto& m = m_[idx];
        auto& v = v_[idx];
        updated.assign(val.begin(), val.end());
        for (std::size_t i = 0; i < val.size(); ++i) {
            double gi = g[i];
            if (cfg_.weight_decay != 0.0 && !cfg_.decoupled_decay)
                gi += cfg_.weight_decay * val[i]; // d/dtheta of 0.5*lambda*||theta||^2
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gi;
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * gi * gi;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            updated[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.epsilon);
            if (cfg_.weight_decay != 0.0 && cfg_.decoupled_decay)
                updated[i] -= cfg_.lr * cfg_.weight_decay * val[i];
        }
        Tensor handle = t;
        handle.assign(updated);
        ++idx;
    }
}

} // namespace avrfn
