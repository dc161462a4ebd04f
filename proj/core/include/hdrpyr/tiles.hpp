// Copyright 2026 The hdrpyr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <utility>
#include <vector>

#include "hdrpyr/tensor.hpp"

namespace hdrpyr {

inline constexpr int kTileSize = 16;
inline constexpr int kTileStride = 8;

/// Batch of 16x16x3 tiles plus the geometry needed to put them back.
struct TileStack {
    Tensor tiles;  // [N,16,16,3]
    std::vector<std::pair<int, int>> origins;
    int source_h = 0;
    int source_w = 0;
};

/// Tile origins along one axis: 0, stride, 2*stride, ..., with a final origin
/// flush to the far edge when the grid does not divide evenly.
std::vector<int> tile_origins(int extent, int tile, int stride);

/// Overlapping tile extraction. Requires H,W >= 16.
TileStack extract_tiles(const Tensor& patch, int stride = kTileStride,
                        Tape* tape = nullptr);

/// Per-pixel mean over every tile covering that pixel. Rejects geometry that
/// leaves any source pixel uncovered.
Tensor merge_tiles_average(const TileStack& stack, Tape* tape = nullptr);

}  // namespace hdrpyr
