// Copyright 2026 The hdrpyr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "hdrpyr/nets.hpp"
#include "hdrpyr/tensor.hpp"

namespace hdrpyr {

inline constexpr int kPatchSize = 224;
inline constexpr int kPatchStride = kPatchSize / 2;  // half overlap

/// Patch origins over a (possibly padded) image, plus how much padding was
/// added so the merged result can be cropped back.
struct PatchGrid {
    std::vector<int> rows;
    std::vector<int> cols;
    int padded_h = 0, padded_w = 0;
    int source_h = 0, source_w = 0;
};

struct EnhanceConfig {
    Ordering ordering = Ordering::TFDL;
};

/// Separable raised-cosine patch weights with a small floor so border patches
/// never divide by near-zero. At 50% overlap interior weights sum to a
/// constant; merging normalizes per pixel either way.
Tensor raised_cosine_window();

/// Half-overlapping 224x224 patches with border-flush final origins. Images
/// smaller than a patch are extended by reflection first.
PatchGrid split_patches(const Tensor& image, std::vector<Tensor>* patches);

/// Weighted per-pixel average of the patches over the padded canvas.
Tensor merge_patches(const std::vector<Tensor>& patches, const PatchGrid& grid,
                     const Tensor& window);

/// Per-patch pyramid processing: detail levels go through tone-map/denoise in
/// the configured order, the base level is only tone-mapped, then the pyramid
/// is reconstructed and clamped to [0,1].
Tensor enhance_patch(const Tensor& patch, const ModelBundle& bundle, Ordering ordering,
                     Tape* tape = nullptr);
Tensor enhance_patch(const Tensor& patch, const ModelBundle& bundle, Tape* tape = nullptr);

/// Whole-image enhancement: split, enhance each patch, window-merge, crop.
Tensor enhance_image(const Tensor& image, const ModelBundle& bundle,
                     const EnhanceConfig& config);

}  // namespace hdrpyr
