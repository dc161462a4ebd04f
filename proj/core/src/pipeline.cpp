// Copyright 2026 The hdrpyr Authors
// SPDX-License-Identifier: Apache-2.0

#include "hdrpyr/pipeline.hpp"

#include <cmath>
#include <string>

#include "hdrpyr/errors.hpp"
#include "hdrpyr/pyramid.hpp"
#include "hdrpyr/tiles.hpp"

namespace hdrpyr {

namespace {

constexpr float kWindowFloor = 1e-3f;

inline int reflect_fold(int i, int n) {
    if (n == 1) return 0;
    while (i < 0 || i >= n) {
        if (i < 0) i = -i;
        if (i >= n) i = 2 * (n - 1) - i;
    }
    return i;
}

// Extend an image to at least patch size by reflection.
Tensor reflect_extend(const Tensor& image, int target_h, int target_w) {
    const int h = image.shape()[0], w = image.shape()[1], c = image.shape()[2];
    Tensor out = Tensor::zeros({target_h, target_w, c});
    for (int y = 0; y < target_h; ++y) {
        const int sy = reflect_fold(y, h);
        for (int x = 0; x < target_w; ++x) {
            const int sx = reflect_fold(x, w);
            const float* sp = image.data() + (static_cast<std::int64_t>(sy) * w + sx) * c;
            float* dp = out.data() + (static_cast<std::int64_t>(y) * target_w + x) * c;
            for (int ch = 0; ch < c; ++ch) dp[ch] = sp[ch];
        }
    }
    return out;
}

}  // namespace

Tensor raised_cosine_window() {
    std::vector<float> w1d(kPatchSize);
    for (int i = 0; i < kPatchSize; ++i) {
        const float s = std::sin(static_cast<float>(M_PI) * (i + 0.5f) / kPatchSize);
        w1d[i] = kWindowFloor + (1.0f - kWindowFloor) * s * s;
    }
    Tensor win = Tensor::zeros({kPatchSize, kPatchSize});
    for (int i = 0; i < kPatchSize; ++i)
        for (int j = 0; j < kPatchSize; ++j)
            win.data()[static_cast<std::int64_t>(i) * kPatchSize + j] = w1d[i] * w1d[j];
    return win;
}

PatchGrid split_patches(const Tensor& image, std::vector<Tensor>* patches) {
    if (image.shape().size() != 3 || image.shape()[2] != 3) {
        throw ShapeError("split_patches: image must be [H,W,3]");
    }
    PatchGrid grid;
    grid.source_h = image.shape()[0];
    grid.source_w = image.shape()[1];
    grid.padded_h = std::max(grid.source_h, kPatchSize);
    grid.padded_w = std::max(grid.source_w, kPatchSize);

    Tensor canvas = (grid.padded_h != grid.source_h || grid.padded_w != grid.source_w)
                        ? reflect_extend(image, grid.padded_h, grid.padded_w)
                        : image;

    grid.rows = tile_origins(grid.padded_h, kPatchSize, kPatchStride);
    grid.cols = tile_origins(grid.padded_w, kPatchSize, kPatchStride);

    if (patches) {
        patches->clear();
        patches->reserve(grid.rows.size() * grid.cols.size());
        for (int r : grid.rows) {
            for (int c : grid.cols) {
                Tensor p = Tensor::zeros({kPatchSize, kPatchSize, 3});
                for (int y = 0; y < kPatchSize; ++y) {
                    const float* sp =
                        canvas.data() +
                        (static_cast<std::int64_t>(r + y) * grid.padded_w + c) * 3;
                    float* dp = p.data() + static_cast<std::int64_t>(y) * kPatchSize * 3;
                    for (int j = 0; j < kPatchSize * 3; ++j) dp[j] = sp[j];
                }
                patches->push_back(std::move(p));
            }
        }
    }
    return grid;
}

Tensor merge_patches(const std::vector<Tensor>& patches, const PatchGrid& grid,
                     const Tensor& window) {
    const std::size_t expected = grid.rows.size() * grid.cols.size();
    if (patches.size() != expected) {
        throw ShapeError("merge_patches: got " + std::to_string(patches.size()) +
                         " patches for a grid of " + std::to_string(expected));
    }
    if (window.shape() != std::vector<int>{kPatchSize, kPatchSize}) {
        throw ShapeError("merge_patches: window must be [224,224]");
    }
    for (const Tensor& p : patches) {
        if (p.shape() != std::vector<int>{kPatchSize, kPatchSize, 3}) {
            throw ShapeError("merge_patches: every patch must be [224,224,3]");
        }
    }

    const int h = grid.padded_h, w = grid.padded_w;
    std::vector<double> num(static_cast<std::size_t>(h) * w * 3, 0.0);
    std::vector<double> den(static_cast<std::size_t>(h) * w, 0.0);

    std::size_t idx = 0;
    for (int r : grid.rows) {
        for (int c : grid.cols) {
            const Tensor& p = patches[idx++];
            for (int y = 0; y < kPatchSize; ++y) {
                for (int x = 0; x < kPatchSize; ++x) {
                    const double wv =
                        window.data()[static_cast<std::int64_t>(y) * kPatchSize + x];
                    const std::int64_t pix = static_cast<std::int64_t>(r + y) * w + (c + x);
                    const float* pv =
                        p.data() + (static_cast<std::int64_t>(y) * kPatchSize + x) * 3;
                    den[pix] += wv;
                    for (int ch = 0; ch < 3; ++ch) num[pix * 3 + ch] += wv * pv[ch];
                }
            }
        }
    }

    Tensor out = Tensor::zeros({h, w, 3});
    for (std::int64_t pix = 0; pix < static_cast<std::int64_t>(h) * w; ++pix) {
        if (den[pix] <= 0.0) throw ShapeError("merge_patches: uncovered pixel");
        for (int ch = 0; ch < 3; ++ch) {
            out.data()[pix * 3 + ch] = static_cast<float>(num[pix * 3 + ch] / den[pix]);
        }
    }
    return out;
}

Tensor enhance_patch(const Tensor& patch, const ModelBundle& bundle, Ordering ordering,
                     Tape* tape) {
    Pyramid pyr = decompose(patch, tape);
    std::array<Tensor, kPyramidLevels - 1> out_levels;
    for (int i = 0; i < kPyramidLevels - 1; ++i) {
        const Tensor& l = pyr.laplacian[i];
        if (ordering == Ordering::TFDL) {
            Tensor mapped = tonemap_level(l, bundle.tonemappers[i], /*signed_level=*/true, tape);
            out_levels[i] = denoise_level(mapped, bundle.denoisers[i], tape);
        } else {
            Tensor denoised = denoise_level(l, bundle.denoisers[i], tape);
            out_levels[i] = tonemap_level(denoised, bundle.tonemappers[i], /*signed_level=*/true, tape);
        }
    }
    Tensor base =
        tonemap_level(pyr.base, bundle.tonemappers[kPyramidLevels - 1], /*signed_level=*/false, tape);
    Tensor merged = reconstruct(out_levels[0], out_levels[1], out_levels[2], base, tape);
    return clamp01(merged, tape);
}

Tensor enhance_patch(const Tensor& patch, const ModelBundle& bundle, Tape* tape) {
    return enhance_patch(patch, bundle, bundle.ordering, tape);
}

Tensor enhance_image(const Tensor& image, const ModelBundle& bundle,
                     const EnhanceConfig& config) {
    std::vector<Tensor> patches;
    PatchGrid grid = split_patches(image, &patches);

    std::vector<Tensor> enhanced(patches.size());
    const int n = static_cast<int>(patches.size());
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i) {
        enhanced[i] = enhance_patch(patches[i], bundle, config.ordering, nullptr);
    }

    Tensor merged = merge_patches(enhanced, grid, raised_cosine_window());
    if (grid.padded_h == grid.source_h && grid.padded_w == grid.source_w) return merged;

    Tensor out = Tensor::zeros({grid.source_h, grid.source_w, 3});
    for (int y = 0; y < grid.source_h; ++y) {
        const float* sp = merged.data() + static_cast<std::int64_t>(y) * grid.padded_w * 3;
        float* dp = out.data() + static_cast<std::int64_t>(y) * grid.source_w * 3;
        for (int j = 0; j < grid.source_w * 3; ++j) dp[j] = sp[j];
    }
    return out;
}

}  // namespace hdrpyr
