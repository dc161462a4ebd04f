// Copyright 2026 The hdrpyr Authors
// SPDX-License-Identifier: Apache-2.0

#include "hdrpyr/pyramid.hpp"

#include <string>

#include "hdrpyr/errors.hpp"

namespace hdrpyr {

namespace {

// Burt-Adelson binomial kernel.
constexpr float kK5[5] = {1.0f / 16, 4.0f / 16, 6.0f / 16, 4.0f / 16, 1.0f / 16};

// Mirror-without-repeat fold into [0, n).
inline int reflect(int i, int n) {
    if (n == 1) return 0;
    while (i < 0 || i >= n) {
        if (i < 0) i = -i;
        if (i >= n) i = 2 * (n - 1) - i;
    }
    return i;
}

// Vertical blur + decimate: [h,w,c] -> [h/2,w,c].
void down_v(const float* x, float* out, int h, int w, int c) {
    const int oh = h / 2;
    const std::int64_t row = static_cast<std::int64_t>(w) * c;
    for (int oy = 0; oy < oh; ++oy) {
        float* orow = out + oy * row;
        for (std::int64_t j = 0; j < row; ++j) orow[j] = 0.0f;
        for (int k = 0; k < 5; ++k) {
            const float* xrow = x + static_cast<std::int64_t>(reflect(2 * oy + k - 2, h)) * row;
            const float kv = kK5[k];
            for (std::int64_t j = 0; j < row; ++j) orow[j] += kv * xrow[j];
        }
    }
}

void down_v_adj(const float* dout, float* dx, int h, int w, int c) {
    const int oh = h / 2;
    const std::int64_t row = static_cast<std::int64_t>(w) * c;
    for (int oy = 0; oy < oh; ++oy) {
        const float* grow = dout + oy * row;
        for (int k = 0; k < 5; ++k) {
            float* xrow = dx + static_cast<std::int64_t>(reflect(2 * oy + k - 2, h)) * row;
            const float kv = kK5[k];
            for (std::int64_t j = 0; j < row; ++j) xrow[j] += kv * grow[j];
        }
    }
}

// Horizontal blur + decimate: [h,w,c] -> [h,w/2,c].
void down_h(const float* x, float* out, int h, int w, int c) {
    const int ow = w / 2;
    for (int y = 0; y < h; ++y) {
        const float* xrow = x + static_cast<std::int64_t>(y) * w * c;
        float* orow = out + static_cast<std::int64_t>(y) * ow * c;
        for (int ox = 0; ox < ow; ++ox) {
            float* op = orow + static_cast<std::int64_t>(ox) * c;
            for (int ch = 0; ch < c; ++ch) op[ch] = 0.0f;
            for (int k = 0; k < 5; ++k) {
                const float* xp = xrow + static_cast<std::int64_t>(reflect(2 * ox + k - 2, w)) * c;
                for (int ch = 0; ch < c; ++ch) op[ch] += kK5[k] * xp[ch];
            }
        }
    }
}

void down_h_adj(const float* dout, float* dx, int h, int w, int c) {
    const int ow = w / 2;
    for (int y = 0; y < h; ++y) {
        float* xrow = dx + static_cast<std::int64_t>(y) * w * c;
        const float* grow = dout + static_cast<std::int64_t>(y) * ow * c;
        for (int ox = 0; ox < ow; ++ox) {
            const float* gp = grow + static_cast<std::int64_t>(ox) * c;
            for (int k = 0; k < 5; ++k) {
                float* xp = xrow + static_cast<std::int64_t>(reflect(2 * ox + k - 2, w)) * c;
                for (int ch = 0; ch < c; ++ch) xp[ch] += kK5[k] * gp[ch];
            }
        }
    }
}

// Vertical zero-insert + doubled blur: [h,w,c] -> [2h,w,c]. The x2 keeps
// constants fixed after zero insertion.
void up_v(const float* x, float* out, int h, int w, int c) {
    const int oh = 2 * h;
    const std::int64_t row = static_cast<std::int64_t>(w) * c;
    for (int j = 0; j < oh; ++j) {
        float* orow = out + static_cast<std::int64_t>(j) * row;
        for (std::int64_t i = 0; i < row; ++i) orow[i] = 0.0f;
        for (int k = 0; k < 5; ++k) {
            const int zi = reflect(j + k - 2, oh);
            if (zi % 2 != 0) continue;
            const float kv = 2.0f * kK5[k];
            const float* xrow = x + static_cast<std::int64_t>(zi / 2) * row;
            for (std::int64_t i = 0; i < row; ++i) orow[i] += kv * xrow[i];
        }
    }
}

void up_v_adj(const float* dout, float* dx, int h, int w, int c) {
    const int oh = 2 * h;
    const std::int64_t row = static_cast<std::int64_t>(w) * c;
    for (int j = 0; j < oh; ++j) {
        const float* grow = dout + static_cast<std::int64_t>(j) * row;
        for (int k = 0; k < 5; ++k) {
            const int zi = reflect(j + k - 2, oh);
            if (zi % 2 != 0) continue;
            const float kv = 2.0f * kK5[k];
            float* xrow = dx + static_cast<std::int64_t>(zi / 2) * row;
            for (std::int64_t i = 0; i < row; ++i) xrow[i] += kv * grow[i];
        }
    }
}

void up_h(const float* x, float* out, int h, int w, int c) {
    const int ow = 2 * w;
    for (int y = 0; y < h; ++y) {
        const float* xrow = x + static_cast<std::int64_t>(y) * w * c;
        float* orow = out + static_cast<std::int64_t>(y) * ow * c;
        for (int j = 0; j < ow; ++j) {
            float* op = orow + static_cast<std::int64_t>(j) * c;
            for (int ch = 0; ch < c; ++ch) op[ch] = 0.0f;
            for (int k = 0; k < 5; ++k) {
                const int zi = reflect(j + k - 2, ow);
                if (zi % 2 != 0) continue;
                const float kv = 2.0f * kK5[k];
                const float* xp = xrow + static_cast<std::int64_t>(zi / 2) * c;
                for (int ch = 0; ch < c; ++ch) op[ch] += kv * xp[ch];
            }
        }
    }
}

void up_h_adj(const float* dout, float* dx, int h, int w, int c) {
    const int ow = 2 * w;
    for (int y = 0; y < h; ++y) {
        float* xrow = dx + static_cast<std::int64_t>(y) * w * c;
        const float* grow = dout + static_cast<std::int64_t>(y) * ow * c;
        for (int j = 0; j < ow; ++j) {
            const float* gp = grow + static_cast<std::int64_t>(j) * c;
            for (int k = 0; k < 5; ++k) {
                const int zi = reflect(j + k - 2, ow);
                if (zi % 2 != 0) continue;
                const float kv = 2.0f * kK5[k];
                float* xp = xrow + static_cast<std::int64_t>(zi / 2) * c;
                for (int ch = 0; ch < c; ++ch) xp[ch] += kv * gp[ch];
            }
        }
    }
}

void check_image(const Tensor& x, const char* op) {
    if (x.shape().size() != 3) throw ShapeError(std::string(op) + ": input must be [H,W,C]");
}

}  // namespace

Tensor pyr_down(const Tensor& x, Tape* tape) {
    check_image(x, "pyr_down");
    const int h = x.shape()[0], w = x.shape()[1], c = x.shape()[2];
    if (h % 2 != 0 || w % 2 != 0) {
        throw ShapeError("pyr_down: dimensions must be even, got " + std::to_string(h) + "x" +
                         std::to_string(w));
    }
    Tensor tmp = Tensor::zeros({h / 2, w, c});
    down_v(x.data(), tmp.data(), h, w, c);
    Tensor y = Tensor::zeros({h / 2, w / 2, c});
    down_h(tmp.data(), y.data(), h / 2, w, c);

    if (tape && tape->tracked(x)) {
        tape->track(y);
        tape->record([x, y, h, w, c](Tape& tp) {
            const auto* d_out = tp.find_adjoint(y);
            if (!d_out || !tp.tracked(x)) return;
            std::vector<float> dtmp(static_cast<std::size_t>(h / 2) * w * c, 0.0f);
            down_h_adj(d_out->data(), dtmp.data(), h / 2, w, c);
            down_v_adj(dtmp.data(), tp.adjoint_of(x).data(), h, w, c);
        });
    }
    return y;
}

Tensor pyr_up(const Tensor& x, Tape* tape) {
    check_image(x, "pyr_up");
    const int h = x.shape()[0], w = x.shape()[1], c = x.shape()[2];
    Tensor tmp = Tensor::zeros({2 * h, w, c});
    up_v(x.data(), tmp.data(), h, w, c);
    Tensor y = Tensor::zeros({2 * h, 2 * w, c});
    up_h(tmp.data(), y.data(), 2 * h, w, c);

    if (tape && tape->tracked(x)) {
        tape->track(y);
        tape->record([x, y, h, w, c](Tape& tp) {
            const auto* d_out = tp.find_adjoint(y);
            if (!d_out || !tp.tracked(x)) return;
            std::vector<float> dtmp(static_cast<std::size_t>(2 * h) * w * c, 0.0f);
            up_h_adj(d_out->data(), dtmp.data(), 2 * h, w, c);
            up_v_adj(dtmp.data(), tp.adjoint_of(x).data(), h, w, c);
        });
    }
    return y;
}

Pyramid decompose(const Tensor& patch, Tape* tape) {
    check_image(patch, "decompose");
    const int div = 1 << (kPyramidLevels - 1);
    const int h = patch.shape()[0], w = patch.shape()[1];
    if (h % div != 0 || w % div != 0) {
        throw ShapeError("decompose: dimensions " + std::to_string(h) + "x" +
                         std::to_string(w) + " must be divisible by " + std::to_string(div));
    }

    Pyramid pyr;
    Tensor g = patch;
    for (int i = 0; i < kPyramidLevels - 1; ++i) {
        Tensor g_next = pyr_down(g, tape);
        pyr.laplacian[i] = sub(g, pyr_up(g_next, tape), tape);
        g = g_next;
    }
    pyr.base = g;
    return pyr;
}

Tensor reconstruct(const Tensor& l0, const Tensor& l1, const Tensor& l2,
                   const Tensor& base, Tape* tape) {
    const Tensor* levels[3] = {&l2, &l1, &l0};
    Tensor g = base;
    for (const Tensor* l : levels) {
        check_image(*l, "reconstruct");
        if (l->shape()[0] != 2 * g.shape()[0] || l->shape()[1] != 2 * g.shape()[1] ||
            l->shape()[2] != g.shape()[2]) {
            throw ShapeError("reconstruct: level shapes must double the next coarser level");
        }
        g = add(*l, pyr_up(g, tape), tape);
    }
    return g;
}

}  // namespace hdrpyr
