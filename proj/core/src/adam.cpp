// Copyright 2026 The hdrpyr Authors
// SPDX-License-Identifier: Apache-2.0

#include "hdrpyr/adam.hpp"

#include <cmath>

#include "hdrpyr/errors.hpp"

namespace hdrpyr {

void adam_step(Tensor param, std::span<const float> grad, AdamState& state,
               const AdamConfig& cfg) {
    const std::size_t n = static_cast<std::size_t>(param.size());
    if (grad.size() != n) throw ShapeError("adam_step: gradient size mismatch");
    if (cfg.lr <= 0.0f) throw TrainingError("adam_step: learning rate must be positive");
    if (!all_finite(grad)) throw TrainingError("adam_step: non-finite gradient, step rejected");

    if (state.m.empty()) {
        state.m.assign(n, 0.0f);
        state.v.assign(n, 0.0f);
    }
    if (state.m.size() != n || state.v.size() != n) {
        throw ShapeError("adam_step: moment buffers do not match parameter");
    }

    state.t += 1;
    const float c1 = 1.0f - std::pow(cfg.beta1, static_cast<float>(state.t));
    const float c2 = 1.0f - std::pow(cfg.beta2, static_cast<float>(state.t));
    float* p = param.data();
    for (std::size_t i = 0; i < n; ++i) {
        const float g = grad[i];
        state.m[i] = cfg.beta1 * state.m[i] + (1.0f - cfg.beta1) * g;
        state.v[i] = cfg.beta2 * state.v[i] + (1.0f - cfg.beta2) * g * g;
        const float m_hat = state.m[i] / c1;
        const float v_hat = state.v[i] / c2;
        p[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
}

AdamOptimizer::AdamOptimizer(std::vector<Tensor> params, AdamConfig cfg)
    : params_(std::move(params)), states_(params_.size()), cfg_(cfg) {}

void AdamOptimizer::step(const std::vector<std::vector<float>>& grads) {
    if (grads.size() != params_.size()) {
        throw ShapeError("AdamOptimizer::step: gradient list size mismatch");
    }
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (!all_finite(std::span<const float>(grads[i]))) {
            throw TrainingError("AdamOptimizer::step: non-finite gradient for parameter " +
                                std::to_string(i));
        }
    }
    for (std::size_t i = 0; i < params_.size(); ++i) {
        adam_step(params_[i], grads[i], states_[i], cfg_);
    }
}

}  // namespace hdrpyr
