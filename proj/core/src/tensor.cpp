// Copyright 2026 The hdrpyr Authors
// SPDX-License-Identifier: Apache-2.0

#include "hdrpyr/tensor.hpp"

#include <atomic>
#include <cmath>
#include <sstream>

#include "hdrpyr/errors.hpp"

namespace hdrpyr {

struct Tensor::Storage {
    std::vector<float> v;
    std::vector<int> shape;
    bool requires_grad = false;
    std::uint64_t id = 0;
};

namespace {

std::atomic<std::uint64_t> g_next_tensor_id{1};

std::int64_t checked_size(const std::vector<int>& shape) {
    std::int64_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw ShapeError("tensor dimensions must be positive");
        n *= d;
    }
    return n;
}

std::string shape_str(const std::vector<int>& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
    os << "]";
    return os.str();
}

}  // namespace

Tensor Tensor::zeros(std::vector<int> shape) {
    Tensor t;
    t.s_ = std::make_shared<Storage>();
    t.s_->v.assign(static_cast<std::size_t>(checked_size(shape)), 0.0f);
    t.s_->shape = std::move(shape);
    t.s_->id = g_next_tensor_id.fetch_add(1, std::memory_order_relaxed);
    return t;
}

Tensor Tensor::full(std::vector<int> shape, float value) {
    Tensor t = zeros(std::move(shape));
    for (float& x : t.s_->v) x = value;
    return t;
}

Tensor Tensor::from_data(std::vector<int> shape, std::vector<float> data) {
    const std::int64_t n = checked_size(shape);
    if (n != static_cast<std::int64_t>(data.size())) {
        throw ShapeError("data length " + std::to_string(data.size()) +
                         " does not match shape " + shape_str(shape));
    }
    Tensor t;
    t.s_ = std::make_shared<Storage>();
    t.s_->v = std::move(data);
    t.s_->shape = std::move(shape);
    t.s_->id = g_next_tensor_id.fetch_add(1, std::memory_order_relaxed);
    return t;
}

const std::vector<int>& Tensor::shape() const { return s_->shape; }

std::int64_t Tensor::size() const {
    return s_ ? static_cast<std::int64_t>(s_->v.size()) : 0;
}

float* Tensor::data() { return s_->v.data(); }
const float* Tensor::data() const { return s_->v.data(); }
std::span<float> Tensor::values() { return {s_->v.data(), s_->v.size()}; }
std::span<const float> Tensor::values() const { return {s_->v.data(), s_->v.size()}; }

float Tensor::scalar() const {
    if (size() != 1) throw ShapeError("scalar() on tensor of size " + std::to_string(size()));
    return s_->v[0];
}

bool Tensor::requires_grad() const { return s_ && s_->requires_grad; }
void Tensor::set_requires_grad(bool b) { s_->requires_grad = b; }
std::uint64_t Tensor::id() const { return s_ ? s_->id : 0; }

Tensor Tensor::clone() const {
    if (!s_) return {};
    Tensor t = from_data(s_->shape, s_->v);
    t.s_->requires_grad = s_->requires_grad;
    return t;
}

bool Tensor::same_shape(const Tensor& other) const {
    return s_ && other.s_ && s_->shape == other.s_->shape;
}

// ---------------------------------------------------------------------------
// Tape

bool Tape::tracked(const Tensor& t) const {
    return t.defined() && (t.requires_grad() || tracked_.count(t.id()) > 0);
}

void Tape::track(const Tensor& t) { tracked_.insert(t.id()); }

void Tape::record(std::function<void(Tape&)> backward_fn) {
    nodes_.push_back(std::move(backward_fn));
}

std::vector<float>& Tape::adjoint_of(const Tensor& t) {
    auto [it, inserted] = adjoints_.try_emplace(t.id());
    if (inserted) it->second.assign(static_cast<std::size_t>(t.size()), 0.0f);
    return it->second;
}

const std::vector<float>* Tape::find_adjoint(const Tensor& t) const {
    auto it = adjoints_.find(t.id());
    return it == adjoints_.end() ? nullptr : &it->second;
}

void Tape::backward(const Tensor& scalar_output, float seed) {
    if (!scalar_output.defined() || scalar_output.size() != 1) {
        throw ShapeError("backward expects a scalar output tensor");
    }
    adjoints_.clear();
    adjoint_of(scalar_output)[0] = seed;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)(*this);
}

std::vector<float> Tape::grad(const Tensor& t) const {
    if (const auto* adj = find_adjoint(t)) return *adj;
    return std::vector<float>(static_cast<std::size_t>(t.size()), 0.0f);
}

// ---------------------------------------------------------------------------
// Shared op helpers

namespace {

bool wants(Tape* tape, std::initializer_list<const Tensor*> inputs) {
    if (!tape) return false;
    for (const Tensor* t : inputs) {
        if (tape->tracked(*t)) return true;
    }
    return false;
}

inline float act_prime_from_output(float y, Activation act) {
    switch (act) {
        case Activation::Relu: return y > 0.0f ? 1.0f : 0.0f;
        case Activation::Sigmoid: return y * (1.0f - y);
        default: return 1.0f;
    }
}

// ---------------------------------------------------------------------------
// Pointwise linear kernels. The channel loop is innermost and contiguous so
// it vectorizes without reassociating a reduction; fixed-size variants keep
// the accumulator row in registers for the shapes the networks actually use.

template <int CIN, int COUT>
void pw_fwd_fixed(const float* __restrict x, const float* __restrict wt,
                  const float* __restrict b, float* __restrict y,
                  std::int64_t pixels, Activation act) {
    for (std::int64_t p = 0; p < pixels; ++p) {
        const float* xr = x + p * CIN;
        float* yr = y + p * COUT;
        float acc[COUT];
        for (int co = 0; co < COUT; ++co) acc[co] = b[co];
        for (int ci = 0; ci < CIN; ++ci) {
            const float xv = xr[ci];
            const float* wr = wt + ci * COUT;
            for (int co = 0; co < COUT; ++co) acc[co] += xv * wr[co];
        }
        if (act == Activation::Relu) {
            for (int co = 0; co < COUT; ++co) yr[co] = acc[co] > 0.0f ? acc[co] : 0.0f;
        } else if (act == Activation::Sigmoid) {
            for (int co = 0; co < COUT; ++co) yr[co] = 1.0f / (1.0f + std::exp(-acc[co]));
        } else {
            for (int co = 0; co < COUT; ++co) yr[co] = acc[co];
        }
    }
}

void pw_fwd_generic(const float* x, const float* wt, const float* b, float* y,
                    std::int64_t pixels, int cin, int cout, Activation act) {
    std::vector<float> acc(static_cast<std::size_t>(cout));
    for (std::int64_t p = 0; p < pixels; ++p) {
        const float* xr = x + p * cin;
        float* yr = y + p * cout;
        for (int co = 0; co < cout; ++co) acc[co] = b[co];
        for (int ci = 0; ci < cin; ++ci) {
            const float xv = xr[ci];
            const float* wr = wt + static_cast<std::int64_t>(ci) * cout;
            for (int co = 0; co < cout; ++co) acc[co] += xv * wr[co];
        }
        if (act == Activation::Relu) {
            for (int co = 0; co < cout; ++co) yr[co] = acc[co] > 0.0f ? acc[co] : 0.0f;
        } else if (act == Activation::Sigmoid) {
            for (int co = 0; co < cout; ++co) yr[co] = 1.0f / (1.0f + std::exp(-acc[co]));
        } else {
            for (int co = 0; co < cout; ++co) yr[co] = acc[co];
        }
    }
}

template <int CIN, int COUT>
void pw_bwd_fixed(const float* __restrict x, const float* __restrict w,
                  const float* __restrict y, const float* __restrict dy,
                  float* __restrict dx, float* __restrict dw, float* __restrict db,
                  std::int64_t pixels, Activation act) {
    for (std::int64_t p = 0; p < pixels; ++p) {
        const float* yr = y + p * COUT;
        const float* dyr = dy + p * COUT;
        float g[COUT];
        for (int co = 0; co < COUT; ++co) g[co] = dyr[co] * act_prime_from_output(yr[co], act);
        if (db) {
            for (int co = 0; co < COUT; ++co) db[co] += g[co];
        }
        if (dw) {
            const float* xr = x + p * CIN;
            for (int co = 0; co < COUT; ++co) {
                const float gv = g[co];
                float* dwr = dw + co * CIN;
                for (int ci = 0; ci < CIN; ++ci) dwr[ci] += gv * xr[ci];
            }
        }
        if (dx) {
            float* dxr = dx + p * CIN;
            for (int co = 0; co < COUT; ++co) {
                const float gv = g[co];
                const float* wr = w + co * CIN;
                for (int ci = 0; ci < CIN; ++ci) dxr[ci] += gv * wr[ci];
            }
        }
    }
}

void pw_bwd_generic(const float* x, const float* w, const float* y, const float* dy,
                    float* dx, float* dw, float* db, std::int64_t pixels, int cin,
                    int cout, Activation act) {
    std::vector<float> g(static_cast<std::size_t>(cout));
    for (std::int64_t p = 0; p < pixels; ++p) {
        const float* yr = y + p * cout;
        const float* dyr = dy + p * cout;
        for (int co = 0; co < cout; ++co) g[co] = dyr[co] * act_prime_from_output(yr[co], act);
        if (db) {
            for (int co = 0; co < cout; ++co) db[co] += g[co];
        }
        if (dw) {
            const float* xr = x + p * cin;
            for (int co = 0; co < cout; ++co) {
                const float gv = g[co];
                float* dwr = dw + static_cast<std::int64_t>(co) * cin;
                for (int ci = 0; ci < cin; ++ci) dwr[ci] += gv * xr[ci];
            }
        }
        if (dx) {
            float* dxr = dx + p * cin;
            for (int co = 0; co < cout; ++co) {
                const float gv = g[co];
                const float* wr = w + static_cast<std::int64_t>(co) * cin;
                for (int ci = 0; ci < cin; ++ci) dxr[ci] += gv * wr[ci];
            }
        }
    }
}

using PwFwdFn = void (*)(const float*, const float*, const float*, float*, std::int64_t,
                         Activation);
using PwBwdFn = void (*)(const float*, const float*, const float*, const float*, float*,
                         float*, float*, std::int64_t, Activation);

struct PwKernel {
    int cin, cout;
    PwFwdFn fwd;
    PwBwdFn bwd;
};

constexpr PwKernel kPwKernels[] = {
    {3, 32, pw_fwd_fixed<3, 32>, pw_bwd_fixed<3, 32>},
    {32, 32, pw_fwd_fixed<32, 32>, pw_bwd_fixed<32, 32>},
    {32, 3, pw_fwd_fixed<32, 3>, pw_bwd_fixed<32, 3>},
    {3, 64, pw_fwd_fixed<3, 64>, pw_bwd_fixed<3, 64>},
    {64, 64, pw_fwd_fixed<64, 64>, pw_bwd_fixed<64, 64>},
    {64, 3, pw_fwd_fixed<64, 3>, pw_bwd_fixed<64, 3>},
};

const PwKernel* find_pw_kernel(int cin, int cout) {
    for (const PwKernel& k : kPwKernels) {
        if (k.cin == cin && k.cout == cout) return &k;
    }
    return nullptr;
}

}  // namespace

// ---------------------------------------------------------------------------
// Operations

Tensor pointwise_linear(const Tensor& x, const Tensor& weight, const Tensor& bias,
                        Activation act, Tape* tape) {
    if (weight.shape().size() != 2) throw ShapeError("pointwise_linear: weight must be 2-d");
    const int cout = weight.shape()[0];
    const int cin = weight.shape()[1];
    if (x.shape().empty() || x.shape().back() != cin) {
        throw ShapeError("pointwise_linear: input channel dim " +
                         std::to_string(x.shape().empty() ? 0 : x.shape().back()) +
                         " does not match weight input dim " + std::to_string(cin));
    }
    if (bias.shape().size() != 1 || bias.shape()[0] != cout) {
        throw ShapeError("pointwise_linear: bias must have " + std::to_string(cout) +
                         " entries");
    }

    std::vector<int> out_shape = x.shape();
    out_shape.back() = cout;
    Tensor y = Tensor::zeros(out_shape);
    const std::int64_t pixels = x.size() / cin;

    // Transposed copy of the weight keeps the forward inner loop contiguous.
    std::vector<float> wt(static_cast<std::size_t>(cin) * cout);
    for (int co = 0; co < cout; ++co)
        for (int ci = 0; ci < cin; ++ci) wt[static_cast<std::size_t>(ci) * cout + co] =
            weight.data()[static_cast<std::size_t>(co) * cin + ci];

    if (const PwKernel* k = find_pw_kernel(cin, cout)) {
        k->fwd(x.data(), wt.data(), bias.data(), y.data(), pixels, act);
    } else {
        pw_fwd_generic(x.data(), wt.data(), bias.data(), y.data(), pixels, cin, cout, act);
    }

    if (wants(tape, {&x, &weight, &bias})) {
        tape->track(y);
        tape->record([x, weight, bias, y, act, cin, cout, pixels](Tape& tp) {
            const auto* d_out = tp.find_adjoint(y);
            if (!d_out) return;
            float* dx = tp.tracked(x) ? tp.adjoint_of(x).data() : nullptr;
            float* dw = tp.tracked(weight) ? tp.adjoint_of(weight).data() : nullptr;
            float* db = tp.tracked(bias) ? tp.adjoint_of(bias).data() : nullptr;
            if (!dx && !dw && !db) return;
            if (const PwKernel* k = find_pw_kernel(cin, cout)) {
                k->bwd(x.data(), weight.data(), y.data(), d_out->data(), dx, dw, db,
                       pixels, act);
            } else {
                pw_bwd_generic(x.data(), weight.data(), y.data(), d_out->data(), dx, dw,
                               db, pixels, cin, cout, act);
            }
        });
    }
    return y;
}

Tensor activation(const Tensor& x, Activation kind, Tape* tape) {
    Tensor y = Tensor::zeros(x.shape());
    const float* xi = x.data();
    float* yo = y.data();
    const std::int64_t n = x.size();
    if (kind == Activation::Relu) {
        for (std::int64_t i = 0; i < n; ++i) yo[i] = xi[i] > 0.0f ? xi[i] : 0.0f;
    } else if (kind == Activation::Sigmoid) {
        for (std::int64_t i = 0; i < n; ++i) yo[i] = 1.0f / (1.0f + std::exp(-xi[i]));
    } else {
        for (std::int64_t i = 0; i < n; ++i) yo[i] = xi[i];
    }

    if (wants(tape, {&x})) {
        tape->track(y);
        tape->record([x, y, kind, n](Tape& tp) {
            const auto* d_out = tp.find_adjoint(y);
            if (!d_out) return;
            if (!tp.tracked(x)) return;
            auto& dx = tp.adjoint_of(x);
            const float* yv = y.data();
            for (std::int64_t i = 0; i < n; ++i)
                dx[i] += (*d_out)[i] * act_prime_from_output(yv[i], kind);
        });
    }
    return y;
}

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b)) {
        throw ShapeError(std::string(op) + ": shape " + shape_str(a.shape()) +
                         " vs " + shape_str(b.shape()));
    }
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b, Tape* tape) {
    require_same_shape(a, b, "add");
    Tensor y = Tensor::zeros(a.shape());
    const std::int64_t n = a.size();
    for (std::int64_t i = 0; i < n; ++i) y.data()[i] = a.data()[i] + b.data()[i];
    if (wants(tape, {&a, &b})) {
        tape->track(y);
        tape->record([a, b, y, n](Tape& tp) {
            const auto* d_out = tp.find_adjoint(y);
            if (!d_out) return;
            if (tp.tracked(a)) {
                auto& da = tp.adjoint_of(a);
                for (std::int64_t i = 0; i < n; ++i) da[i] += (*d_out)[i];
            }
            if (tp.tracked(b)) {
                auto& db = tp.adjoint_of(b);
                for (std::int64_t i = 0; i < n; ++i) db[i] += (*d_out)[i];
            }
        });
    }
    return y;
}

Tensor sub(const Tensor& a, const Tensor& b, Tape* tape) {
    require_same_shape(a, b, "sub");
    Tensor y = Tensor::zeros(a.shape());
    const std::int64_t n = a.size();
    for (std::int64_t i = 0; i < n; ++i) y.data()[i] = a.data()[i] - b.data()[i];
    if (wants(tape, {&a, &b})) {
        tape->track(y);
        tape->record([a, b, y, n](Tape& tp) {
            const auto* d_out = tp.find_adjoint(y);
            if (!d_out) return;
            if (tp.tracked(a)) {
                auto& da = tp.adjoint_of(a);
                for (std::int64_t i = 0; i < n; ++i) da[i] += (*d_out)[i];
            }
            if (tp.tracked(b)) {
                auto& db = tp.adjoint_of(b);
                for (std::int64_t i = 0; i < n; ++i) db[i] -= (*d_out)[i];
            }
        });
    }
    return y;
}

Tensor hadamard(const Tensor& a, const Tensor& b, Tape* tape) {
    require_same_shape(a, b, "hadamard");
    Tensor y = Tensor::zeros(a.shape());
    const std::int64_t n = a.size();
    for (std::int64_t i = 0; i < n; ++i) y.data()[i] = a.data()[i] * b.data()[i];
    if (wants(tape, {&a, &b})) {
        tape->track(y);
        tape->record([a, b, y, n](Tape& tp) {
            const auto* d_out = tp.find_adjoint(y);
            if (!d_out) return;
            if (tp.tracked(a)) {
                auto& da = tp.adjoint_of(a);
                const float* bv = b.data();
                for (std::int64_t i = 0; i < n; ++i) da[i] += (*d_out)[i] * bv[i];
            }
            if (tp.tracked(b)) {
                auto& db = tp.adjoint_of(b);
                const float* av = a.data();
                for (std::int64_t i = 0; i < n; ++i) db[i] += (*d_out)[i] * av[i];
            }
        });
    }
    return y;
}

Tensor affine(const Tensor& x, float scale, float shift, Tape* tape) {
    Tensor y = Tensor::zeros(x.shape());
    const std::int64_t n = x.size();
    for (std::int64_t i = 0; i < n; ++i) y.data()[i] = scale * x.data()[i] + shift;
    if (wants(tape, {&x})) {
        tape->track(y);
        tape->record([x, y, scale, n](Tape& tp) {
            const auto* d_out = tp.find_adjoint(y);
            if (!d_out || !tp.tracked(x)) return;
            auto& dx = tp.adjoint_of(x);
            for (std::int64_t i = 0; i < n; ++i) dx[i] += scale * (*d_out)[i];
        });
    }
    return y;
}

Tensor l1_loss(const Tensor& a, const Tensor& b, Tape* tape) {
    require_same_shape(a, b, "l1_loss");
    const std::int64_t n = a.size();
    double acc = 0.0;
    for (std::int64_t i = 0; i < n; ++i)
        acc += std::abs(static_cast<double>(a.data()[i]) - static_cast<double>(b.data()[i]));
    Tensor y = Tensor::from_data({1}, {static_cast<float>(acc / static_cast<double>(n))});

    if (wants(tape, {&a, &b})) {
        tape->track(y);
        tape->record([a, b, y, n](Tape& tp) {
            const auto* d_out = tp.find_adjoint(y);
            if (!d_out) return;
            const float s = (*d_out)[0] / static_cast<float>(n);
            const float* av = a.data();
            const float* bv = b.data();
            if (tp.tracked(a)) {
                auto& da = tp.adjoint_of(a);
                for (std::int64_t i = 0; i < n; ++i) {
                    const float d = av[i] - bv[i];
                    da[i] += d > 0.0f ? s : (d < 0.0f ? -s : 0.0f);
                }
            }
            if (tp.tracked(b)) {
                auto& db = tp.adjoint_of(b);
                for (std::int64_t i = 0; i < n; ++i) {
                    const float d = av[i] - bv[i];
                    db[i] -= d > 0.0f ? s : (d < 0.0f ? -s : 0.0f);
                }
            }
        });
    }
    return y;
}

Tensor fixed_linear(const Tensor& x, const Tensor& basis, Tape* tape) {
    if (basis.shape().size() != 2) throw ShapeError("fixed_linear: basis must be 2-d");
    const int m = basis.shape()[0];
    const int k = basis.shape()[1];
    if (x.shape().empty() || x.shape().back() != k) {
        throw ShapeError("fixed_linear: trailing dim " +
                         std::to_string(x.shape().empty() ? 0 : x.shape().back()) +
                         " does not match basis columns " + std::to_string(k));
    }
    std::vector<int> out_shape = x.shape();
    out_shape.back() = m;
    Tensor y = Tensor::zeros(out_shape);
    const std::int64_t rows = x.size() / k;
    const float* bv = basis.data();
    for (std::int64_t r = 0; r < rows; ++r) {
        const float* xr = x.data() + r * k;
        float* yr = y.data() + r * m;
        for (int i = 0; i < m; ++i) {
            const float* br = bv + static_cast<std::int64_t>(i) * k;
            float acc = 0.0f;
            for (int j = 0; j < k; ++j) acc += br[j] * xr[j];
            yr[i] = acc;
        }
    }

    // The basis is a constant map: it never accumulates gradient, only x does.
    if (wants(tape, {&x})) {
        tape->track(y);
        tape->record([x, basis, y, rows, m, k](Tape& tp) {
            const auto* d_out = tp.find_adjoint(y);
            if (!d_out || !tp.tracked(x)) return;
            auto& dx = tp.adjoint_of(x);
            const float* bv = basis.data();
            for (std::int64_t r = 0; r < rows; ++r) {
                const float* dyr = d_out->data() + r * m;
                float* dxr = dx.data() + r * k;
                for (int i = 0; i < m; ++i) {
                    const float g = dyr[i];
                    const float* br = bv + static_cast<std::int64_t>(i) * k;
                    for (int j = 0; j < k; ++j) dxr[j] += g * br[j];
                }
            }
        });
    }
    return y;
}

Tensor conv3x3_stride2(const Tensor& x, const Tensor& weight, const Tensor& bias,
                       Tape* tape) {
    if (x.shape().size() != 3) throw ShapeError("conv3x3_stride2: input must be [H,W,C]");
    if (weight.shape().size() != 4 || weight.shape()[1] != 3 || weight.shape()[2] != 3) {
        throw ShapeError("conv3x3_stride2: weight must be [Cout,3,3,Cin]");
    }
    const int h = x.shape()[0], w = x.shape()[1], cin = x.shape()[2];
    const int cout = weight.shape()[0];
    if (weight.shape()[3] != cin) {
        throw ShapeError("conv3x3_stride2: weight Cin " + std::to_string(weight.shape()[3]) +
                         " does not match input channels " + std::to_string(cin));
    }
    if (bias.shape().size() != 1 || bias.shape()[0] != cout) {
        throw ShapeError("conv3x3_stride2: bias size mismatch");
    }
    const int oh = (h + 1) / 2, ow = (w + 1) / 2;
    Tensor y = Tensor::zeros({oh, ow, cout});

    const float* xv = x.data();
    const float* wv = weight.data();
    float* yv = y.data();
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            float* yr = yv + (static_cast<std::int64_t>(oy) * ow + ox) * cout;
            for (int co = 0; co < cout; ++co) yr[co] = bias.data()[co];
            for (int ky = 0; ky < 3; ++ky) {
                const int iy = 2 * oy + ky - 1;
                if (iy < 0 || iy >= h) continue;
                for (int kx = 0; kx < 3; ++kx) {
                    const int ix = 2 * ox + kx - 1;
                    if (ix < 0 || ix >= w) continue;
                    const float* xr = xv + (static_cast<std::int64_t>(iy) * w + ix) * cin;
                    for (int co = 0; co < cout; ++co) {
                        const float* wr =
                            wv + ((static_cast<std::int64_t>(co) * 3 + ky) * 3 + kx) * cin;
                        float acc = 0.0f;
                        for (int ci = 0; ci < cin; ++ci) acc += wr[ci] * xr[ci];
                        yr[co] += acc;
                    }
                }
            }
        }
    }

    if (wants(tape, {&x, &weight, &bias})) {
        tape->track(y);
        tape->record([x, weight, bias, y, h, w, cin, cout, oh, ow](Tape& tp) {
            const auto* d_out = tp.find_adjoint(y);
            if (!d_out) return;
            float* dx = tp.tracked(x) ? tp.adjoint_of(x).data() : nullptr;
            float* dw = tp.tracked(weight) ? tp.adjoint_of(weight).data() : nullptr;
            float* db = tp.tracked(bias) ? tp.adjoint_of(bias).data() : nullptr;
            if (!dx && !dw && !db) return;
            const float* xv = x.data();
            const float* wv = weight.data();
            for (int oy = 0; oy < oh; ++oy) {
                for (int ox = 0; ox < ow; ++ox) {
                    const float* g = d_out->data() +
                                     (static_cast<std::int64_t>(oy) * ow + ox) * cout;
                    if (db) {
                        for (int co = 0; co < cout; ++co) db[co] += g[co];
                    }
                    for (int ky = 0; ky < 3; ++ky) {
                        const int iy = 2 * oy + ky - 1;
                        if (iy < 0 || iy >= h) continue;
                        for (int kx = 0; kx < 3; ++kx) {
                            const int ix = 2 * ox + kx - 1;
                            if (ix < 0 || ix >= w) continue;
                            const std::int64_t xoff =
                                (static_cast<std::int64_t>(iy) * w + ix) * cin;
                            for (int co = 0; co < cout; ++co) {
                                const float gv = g[co];
                                const std::int64_t woff =
                                    ((static_cast<std::int64_t>(co) * 3 + ky) * 3 + kx) * cin;
                                if (dw) {
                                    const float* xr = xv + xoff;
                                    float* dwr = dw + woff;
                                    for (int ci = 0; ci < cin; ++ci) dwr[ci] += gv * xr[ci];
                                }
                                if (dx) {
                                    const float* wr = wv + woff;
                                    float* dxr = dx + xoff;
                                    for (int ci = 0; ci < cin; ++ci) dxr[ci] += gv * wr[ci];
                                }
                            }
                        }
                    }
                }
            }
        });
    }
    return y;
}

Tensor global_avg_pool(const Tensor& x, Tape* tape) {
    if (x.shape().size() != 3) throw ShapeError("global_avg_pool: input must be [H,W,C]");
    const int c = x.shape()[2];
    const std::int64_t spatial = static_cast<std::int64_t>(x.shape()[0]) * x.shape()[1];
    Tensor y = Tensor::zeros({c});
    std::vector<double> acc(static_cast<std::size_t>(c), 0.0);
    for (std::int64_t p = 0; p < spatial; ++p) {
        const float* xr = x.data() + p * c;
        for (int i = 0; i < c; ++i) acc[i] += xr[i];
    }
    for (int i = 0; i < c; ++i)
        y.data()[i] = static_cast<float>(acc[i] / static_cast<double>(spatial));

    if (wants(tape, {&x})) {
        tape->track(y);
        tape->record([x, y, c, spatial](Tape& tp) {
            const auto* d_out = tp.find_adjoint(y);
            if (!d_out || !tp.tracked(x)) return;
            auto& dx = tp.adjoint_of(x);
            const float inv = 1.0f / static_cast<float>(spatial);
            for (std::int64_t p = 0; p < spatial; ++p) {
                float* dxr = dx.data() + p * c;
                for (int i = 0; i < c; ++i) dxr[i] += (*d_out)[i] * inv;
            }
        });
    }
    return y;
}

Tensor film(const Tensor& x, const Tensor& scale, const Tensor& shift, Tape* tape) {
    if (x.shape().size() != 3) throw ShapeError("film: input must be [H,W,C]");
    const int c = x.shape()[2];
    if (scale.size() != c || shift.size() != c) {
        throw ShapeError("film: scale/shift must have one entry per channel");
    }
    const std::int64_t spatial = static_cast<std::int64_t>(x.shape()[0]) * x.shape()[1];
    Tensor y = Tensor::zeros(x.shape());
    for (std::int64_t p = 0; p < spatial; ++p) {
        const float* xr = x.data() + p * c;
        float* yr = y.data() + p * c;
        for (int i = 0; i < c; ++i) yr[i] = xr[i] * scale.data()[i] + shift.data()[i];
    }

    if (wants(tape, {&x, &scale, &shift})) {
        tape->track(y);
        tape->record([x, scale, shift, y, c, spatial](Tape& tp) {
            const auto* d_out = tp.find_adjoint(y);
            if (!d_out) return;
            float* dx = tp.tracked(x) ? tp.adjoint_of(x).data() : nullptr;
            float* ds = tp.tracked(scale) ? tp.adjoint_of(scale).data() : nullptr;
            float* dt = tp.tracked(shift) ? tp.adjoint_of(shift).data() : nullptr;
            if (!dx && !ds && !dt) return;
            const float* sv = scale.data();
            const float* xv = x.data();
            for (std::int64_t p = 0; p < spatial; ++p) {
                const float* g = d_out->data() + p * c;
                for (int i = 0; i < c; ++i) {
                    if (dx) dx[p * c + i] += g[i] * sv[i];
                    if (ds) ds[i] += g[i] * xv[p * c + i];
                    if (dt) dt[i] += g[i];
                }
            }
        });
    }
    return y;
}

Tensor clamp01(const Tensor& x, Tape* tape) {
    Tensor y = Tensor::zeros(x.shape());
    const std::int64_t n = x.size();
    for (std::int64_t i = 0; i < n; ++i) {
        const float v = x.data()[i];
        y.data()[i] = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
    }
    if (wants(tape, {&x})) {
        tape->track(y);
        tape->record([x, y, n](Tape& tp) {
            const auto* d_out = tp.find_adjoint(y);
            if (!d_out || !tp.tracked(x)) return;
            auto& dx = tp.adjoint_of(x);
            const float* xv = x.data();
            for (std::int64_t i = 0; i < n; ++i) {
                if (xv[i] >= 0.0f && xv[i] <= 1.0f) dx[i] += (*d_out)[i];
            }
        });
    }
    return y;
}

bool all_finite(std::span<const float> v) {
    for (float x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

bool all_finite(const Tensor& t) { return all_finite(t.values()); }

}  // namespace hdrpyr
