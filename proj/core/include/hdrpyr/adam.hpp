// Copyright 2026 The hdrpyr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "hdrpyr/tensor.hpp"

namespace hdrpyr {

struct AdamConfig {
    float lr = 1e-3f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float eps = 1e-8f;
};

/// Per-parameter moment buffers; t counts completed steps.
struct AdamState {
    std::vector<float> m;
    std::vector<float> v;
    long t = 0;
};

/// One bias-corrected Adam update for a single parameter. Rejects non-finite
/// gradients with TrainingError so the training loop can surface the failure.
void adam_step(Tensor param, std::span<const float> grad, AdamState& state,
               const AdamConfig& cfg);

/// Convenience wrapper stepping a fixed parameter list in order.
class AdamOptimizer {
  public:
    AdamOptimizer(std::vector<Tensor> params, AdamConfig cfg);

    /// grads[i] pairs with params[i]; all are updated as one step.
    void step(const std::vector<std::vector<float>>& grads);

    const std::vector<Tensor>& params() const { return params_; }

  private:
    std::vector<Tensor> params_;
    std::vector<AdamState> states_;
    AdamConfig cfg_;
};

}  // namespace hdrpyr
