// Copyright 2026 The hdrpyr Authors
// SPDX-License-Identifier: Apache-2.0

#include "hdrpyr/dct.hpp"

#include <cmath>

#include "hdrpyr/errors.hpp"

namespace hdrpyr {

namespace {

constexpr int kT = kTileSize;
constexpr int kC = 3;

// out = L * X * L^T for one 16x16 block; lt is L transposed, kept separate so
// both passes run with contiguous inner loops.
void sandwich16(const float* __restrict x, float* __restrict out,
                const float* __restrict l, const float* __restrict lt) {
    float tmp[kT * kT];
    for (int u = 0; u < kT; ++u) {
        float* trow = tmp + u * kT;
        for (int j = 0; j < kT; ++j) trow[j] = 0.0f;
        const float* lrow = l + u * kT;
        for (int i = 0; i < kT; ++i) {
            const float b = lrow[i];
            const float* xrow = x + i * kT;
            for (int j = 0; j < kT; ++j) trow[j] += b * xrow[j];
        }
    }
    for (int u = 0; u < kT; ++u) {
        float* orow = out + u * kT;
        for (int v = 0; v < kT; ++v) orow[v] = 0.0f;
        const float* trow = tmp + u * kT;
        for (int j = 0; j < kT; ++j) {
            const float t = trow[j];
            const float* ltrow = lt + j * kT;
            for (int v = 0; v < kT; ++v) orow[v] += t * ltrow[v];
        }
    }
}

// Applies sandwich16 to every tile and channel of a [N,16,16,3] tensor.
void transform_stack(const Tensor& in, Tensor& out, const float* l, const float* lt) {
    const int n = in.shape()[0];
    const float* iv = in.data();
    float* ov = out.data();
    float x[kT * kT];
    float y[kT * kT];
    for (int t = 0; t < n; ++t) {
        const std::int64_t base = static_cast<std::int64_t>(t) * kT * kT * kC;
        for (int ch = 0; ch < kC; ++ch) {
            for (int i = 0; i < kT * kT; ++i) x[i] = iv[base + static_cast<std::int64_t>(i) * kC + ch];
            sandwich16(x, y, l, lt);
            for (int i = 0; i < kT * kT; ++i) ov[base + static_cast<std::int64_t>(i) * kC + ch] = y[i];
        }
    }
}

void check_stack(const TileStack& stack, const char* op) {
    if (!stack.tiles.defined() || stack.tiles.shape().size() != 4 ||
        stack.tiles.shape()[1] != kT || stack.tiles.shape()[2] != kT ||
        stack.tiles.shape()[3] != kC) {
        throw ShapeError(std::string(op) + ": tiles must be [N,16,16,3]");
    }
}

}  // namespace

DctBasis::DctBasis() {
    const double norm0 = std::sqrt(1.0 / kT);
    const double norm = std::sqrt(2.0 / kT);
    for (int k = 0; k < kT; ++k) {
        for (int n = 0; n < kT; ++n) {
            const double s = (k == 0) ? norm0 : norm;
            b_[k * kT + n] = static_cast<float>(
                s * std::cos(M_PI * (2.0 * n + 1.0) * k / (2.0 * kT)));
        }
    }
}

const DctBasis& DctBasis::instance() {
    static const DctBasis basis;
    return basis;
}

Tensor DctBasis::matrix_tensor() const {
    return Tensor::from_data({kT, kT}, std::vector<float>(b_.begin(), b_.end()));
}

Tensor DctBasis::transpose_tensor() const {
    std::vector<float> bt(kT * kT);
    for (int i = 0; i < kT; ++i)
        for (int j = 0; j < kT; ++j) bt[j * kT + i] = b_[i * kT + j];
    return Tensor::from_data({kT, kT}, std::move(bt));
}

namespace {

// Cached transpose of the singleton basis.
const float* basis_fwd() { return DctBasis::instance().matrix(); }
const float* basis_tr() {
    static const std::array<float, kT * kT> bt = [] {
        std::array<float, kT * kT> m{};
        const float* b = DctBasis::instance().matrix();
        for (int i = 0; i < kT; ++i)
            for (int j = 0; j < kT; ++j) m[j * kT + i] = b[i * kT + j];
        return m;
    }();
    return bt.data();
}

TileStack transform(const TileStack& in, Tape* tape, bool forward) {
    check_stack(in, forward ? "dct2" : "idct2");
    TileStack out;
    out.origins = in.origins;
    out.source_h = in.source_h;
    out.source_w = in.source_w;
    out.tiles = Tensor::zeros(in.tiles.shape());

    const float* l = forward ? basis_fwd() : basis_tr();
    const float* lt = forward ? basis_tr() : basis_fwd();
    transform_stack(in.tiles, out.tiles, l, lt);

    if (tape && tape->tracked(in.tiles)) {
        Tensor src = in.tiles;
        Tensor dst = out.tiles;
        tape->track(dst);
        // Orthonormal basis: the adjoint map is the inverse transform.
        tape->record([src, dst, forward](Tape& tp) {
            const auto* d_out = tp.find_adjoint(dst);
            if (!d_out || !tp.tracked(src)) return;
            Tensor g = Tensor::from_data(dst.shape(),
                                         std::vector<float>(d_out->begin(), d_out->end()));
            Tensor gx = Tensor::zeros(src.shape());
            const float* l = forward ? basis_tr() : basis_fwd();
            const float* lt = forward ? basis_fwd() : basis_tr();
            transform_stack(g, gx, l, lt);
            auto& dx = tp.adjoint_of(src);
            const float* gv = gx.data();
            for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += gv[i];
        });
    }
    return out;
}

}  // namespace

TileStack dct2(const TileStack& tiles, Tape* tape) { return transform(tiles, tape, true); }

TileStack idct2(const TileStack& coeffs, Tape* tape) { return transform(coeffs, tape, false); }

}  // namespace hdrpyr
