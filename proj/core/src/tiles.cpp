// Copyright 2026 The hdrpyr Authors
// SPDX-License-Identifier: Apache-2.0

#include "hdrpyr/tiles.hpp"

#include <string>

#include "hdrpyr/errors.hpp"

namespace hdrpyr {

std::vector<int> tile_origins(int extent, int tile, int stride) {
    std::vector<int> origins;
    for (int o = 0; o + tile <= extent; o += stride) origins.push_back(o);
    if (origins.empty() || origins.back() + tile < extent) origins.push_back(extent - tile);
    return origins;
}

namespace {

constexpr int kT = kTileSize;
constexpr int kC = 3;

std::vector<float> coverage_counts(const TileStack& stack) {
    std::vector<float> cnt(static_cast<std::size_t>(stack.source_h) * stack.source_w, 0.0f);
    for (const auto& [r, c] : stack.origins) {
        if (r < 0 || c < 0 || r + kT > stack.source_h || c + kT > stack.source_w) {
            throw ShapeError("tile origin (" + std::to_string(r) + "," + std::to_string(c) +
                             ") outside source " + std::to_string(stack.source_h) + "x" +
                             std::to_string(stack.source_w));
        }
        for (int i = 0; i < kT; ++i)
            for (int j = 0; j < kT; ++j)
                cnt[static_cast<std::size_t>(r + i) * stack.source_w + (c + j)] += 1.0f;
    }
    for (float v : cnt) {
        if (v == 0.0f) throw ShapeError("tile geometry leaves source pixels uncovered");
    }
    return cnt;
}

}  // namespace

TileStack extract_tiles(const Tensor& patch, int stride, Tape* tape) {
    if (patch.shape().size() != 3 || patch.shape()[2] != kC) {
        throw ShapeError("extract_tiles: patch must be [H,W,3]");
    }
    const int h = patch.shape()[0], w = patch.shape()[1];
    if (h < kT || w < kT) {
        throw ShapeError("extract_tiles: patch " + std::to_string(h) + "x" +
                         std::to_string(w) + " smaller than tile size " + std::to_string(kT));
    }
    if (stride <= 0) throw ShapeError("extract_tiles: stride must be positive");

    const std::vector<int> rows = tile_origins(h, kT, stride);
    const std::vector<int> cols = tile_origins(w, kT, stride);

    TileStack stack;
    stack.source_h = h;
    stack.source_w = w;
    stack.origins.reserve(rows.size() * cols.size());
    for (int r : rows)
        for (int c : cols) stack.origins.emplace_back(r, c);

    const int n = static_cast<int>(stack.origins.size());
    stack.tiles = Tensor::zeros({n, kT, kT, kC});
    float* out = stack.tiles.data();
    const float* src = patch.data();
    for (int t = 0; t < n; ++t) {
        const auto [r, c] = stack.origins[t];
        for (int i = 0; i < kT; ++i) {
            const float* srow = src + (static_cast<std::int64_t>(r + i) * w + c) * kC;
            float* drow = out + ((static_cast<std::int64_t>(t) * kT + i) * kT) * kC;
            for (int j = 0; j < kT * kC; ++j) drow[j] = srow[j];
        }
    }

    if (tape && tape->tracked(patch)) {
        Tensor tiles = stack.tiles;
        auto origins = stack.origins;
        tape->track(tiles);
        tape->record([patch, tiles, origins, w](Tape& tp) {
            const auto* d_out = tp.find_adjoint(tiles);
            if (!d_out || !tp.tracked(patch)) return;
            auto& dx = tp.adjoint_of(patch);
            const int n = static_cast<int>(origins.size());
            for (int t = 0; t < n; ++t) {
                const auto [r, c] = origins[t];
                for (int i = 0; i < kT; ++i) {
                    const float* grow =
                        d_out->data() + ((static_cast<std::int64_t>(t) * kT + i) * kT) * kC;
                    float* drow = dx.data() + (static_cast<std::int64_t>(r + i) * w + c) * kC;
                    for (int j = 0; j < kT * kC; ++j) drow[j] += grow[j];
                }
            }
        });
    }
    return stack;
}

Tensor merge_tiles_average(const TileStack& stack, Tape* tape) {
    if (!stack.tiles.defined() || stack.tiles.shape().size() != 4 ||
        stack.tiles.shape()[1] != kT || stack.tiles.shape()[2] != kT ||
        stack.tiles.shape()[3] != kC) {
        throw ShapeError("merge_tiles_average: tiles must be [N,16,16,3]");
    }
    if (stack.tiles.shape()[0] != static_cast<int>(stack.origins.size())) {
        throw ShapeError("merge_tiles_average: tile count does not match geometry");
    }
    const int h = stack.source_h, w = stack.source_w;
    const std::vector<float> cnt = coverage_counts(stack);

    Tensor out = Tensor::zeros({h, w, kC});
    float* ov = out.data();
    const float* tv = stack.tiles.data();
    const int n = static_cast<int>(stack.origins.size());
    for (int t = 0; t < n; ++t) {
        const auto [r, c] = stack.origins[t];
        for (int i = 0; i < kT; ++i) {
            const float* srow = tv + ((static_cast<std::int64_t>(t) * kT + i) * kT) * kC;
            float* drow = ov + (static_cast<std::int64_t>(r + i) * w + c) * kC;
            for (int j = 0; j < kT * kC; ++j) drow[j] += srow[j];
        }
    }
    for (int p = 0; p < h * w; ++p) {
        const float inv = 1.0f / cnt[p];
        for (int ch = 0; ch < kC; ++ch) ov[static_cast<std::int64_t>(p) * kC + ch] *= inv;
    }

    if (tape && tape->tracked(stack.tiles)) {
        Tensor tiles = stack.tiles;
        auto origins = stack.origins;
        tape->track(out);
        tape->record([tiles, out, origins, cnt, w](Tape& tp) {
            const auto* d_out = tp.find_adjoint(out);
            if (!d_out || !tp.tracked(tiles)) return;
            auto& dt = tp.adjoint_of(tiles);
            const int n = static_cast<int>(origins.size());
            for (int t = 0; t < n; ++t) {
                const auto [r, c] = origins[t];
                for (int i = 0; i < kT; ++i) {
                    for (int j = 0; j < kT; ++j) {
                        const std::int64_t p = static_cast<std::int64_t>(r + i) * w + (c + j);
                        const float inv = 1.0f / cnt[p];
                        const float* g = d_out->data() + p * kC;
                        float* d = dt.data() +
                                   (((static_cast<std::int64_t>(t) * kT + i) * kT) + j) * kC;
                        for (int ch = 0; ch < kC; ++ch) d[ch] += g[ch] * inv;
                    }
                }
            }
        });
    }
    return out;
}

}  // namespace hdrpyr
