// Copyright 2026 The hdrpyr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace hdrpyr {

/// Dense row-major float32 array with shape. Copies are shallow (shared
/// storage); use clone() for a deep copy. Gradient recording is opt-in per
/// tensor via requires_grad, or implicit for values produced on a tape.
class Tensor {
  public:
    Tensor() = default;

    static Tensor zeros(std::vector<int> shape);
    static Tensor full(std::vector<int> shape, float value);
    static Tensor from_data(std::vector<int> shape, std::vector<float> data);

    bool defined() const { return static_cast<bool>(s_); }
    const std::vector<int>& shape() const;
    std::int64_t size() const;

    float* data();
    const float* data() const;
    std::span<float> values();
    std::span<const float> values() const;
    float scalar() const;  // value of a single-element tensor

    bool requires_grad() const;
    void set_requires_grad(bool b);

    /// Stable identity of the underlying storage, used to key adjoints.
    std::uint64_t id() const;

    Tensor clone() const;
    bool same_shape(const Tensor& other) const;

  private:
    struct Storage;
    std::shared_ptr<Storage> s_;
};

/// Ordered record of differentiable operations. Each forward op that involves
/// a tracked tensor appends one node; backward() replays the nodes once, in
/// reverse order, accumulating adjoints. A tape is single-use: run the
/// forward pass, call backward(), read grads, discard.
///
/// Independent tapes never share state, so distinct samples/tiles may be
/// evaluated on separate tapes concurrently; cross-tape gradient accumulation
/// is the caller's explicit sum.
class Tape {
  public:
    bool tracked(const Tensor& t) const;
    void track(const Tensor& t);
    void record(std::function<void(Tape&)> backward_fn);

    /// Adjoint buffer of t, zero-initialized on first access.
    std::vector<float>& adjoint_of(const Tensor& t);
    const std::vector<float>* find_adjoint(const Tensor& t) const;

    /// Seeds d(output) = seed and replays all nodes in reverse.
    void backward(const Tensor& scalar_output, float seed = 1.0f);

    /// Gradient of t after backward(); zeros if t never received one.
    std::vector<float> grad(const Tensor& t) const;

    std::size_t node_count() const { return nodes_.size(); }

  private:
    std::vector<std::function<void(Tape&)>> nodes_;
    std::unordered_set<std::uint64_t> tracked_;
    std::unordered_map<std::uint64_t, std::vector<float>> adjoints_;
};

enum class Activation { None, Relu, Sigmoid };

// Recorded operations. A null tape runs forward-only (inference).

/// out[..., co] = sum_ci weight[co,ci] * x[..., ci] + bias[co], then the
/// optional fused activation. x may have any rank; the channel axis is last.
Tensor pointwise_linear(const Tensor& x, const Tensor& weight, const Tensor& bias,
                        Activation act = Activation::None, Tape* tape = nullptr);

Tensor activation(const Tensor& x, Activation kind, Tape* tape = nullptr);

Tensor add(const Tensor& a, const Tensor& b, Tape* tape = nullptr);
Tensor sub(const Tensor& a, const Tensor& b, Tape* tape = nullptr);
Tensor hadamard(const Tensor& a, const Tensor& b, Tape* tape = nullptr);

/// scale * x + shift with scalar constants (no gradient to the constants).
Tensor affine(const Tensor& x, float scale, float shift, Tape* tape = nullptr);

/// Mean absolute difference over all elements, accumulated in float64.
/// Subgradient at exact ties is 0.
Tensor l1_loss(const Tensor& a, const Tensor& b, Tape* tape = nullptr);

/// out[..., m] = sum_k basis[m,k] * x[..., k]. The basis is a constant:
/// backward applies the transpose map to the adjoint and the basis itself
/// never accumulates gradient.
Tensor fixed_linear(const Tensor& x, const Tensor& basis, Tape* tape = nullptr);

/// 3x3 convolution with stride 2 and zero padding 1; output spatial dims are
/// ceil(H/2) x ceil(W/2). weight is [Cout,3,3,Cin].
Tensor conv3x3_stride2(const Tensor& x, const Tensor& weight, const Tensor& bias,
                       Tape* tape = nullptr);

/// [H,W,C] -> [C] spatial mean.
Tensor global_avg_pool(const Tensor& x, Tape* tape = nullptr);

/// Per-channel modulation: out[h,w,c] = x[h,w,c] * scale[c] + shift[c].
Tensor film(const Tensor& x, const Tensor& scale, const Tensor& shift,
            Tape* tape = nullptr);

/// Clamp to [0,1]; pass-through gradient inside the range.
Tensor clamp01(const Tensor& x, Tape* tape = nullptr);

bool all_finite(const Tensor& t);
bool all_finite(std::span<const float> v);

}  // namespace hdrpyr
