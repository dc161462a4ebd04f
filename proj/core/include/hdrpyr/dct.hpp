// Copyright 2026 The hdrpyr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>

#include "hdrpyr/tensor.hpp"
#include "hdrpyr/tiles.hpp"

namespace hdrpyr {

/// Orthonormal 16x16 DCT-II basis. B * B^T == I, so the inverse transform is
/// the transpose and the backward pass of each transform is the other one.
class DctBasis {
  public:
    static const DctBasis& instance();

    const float* matrix() const { return b_.data(); }           // row-major [16][16]
    Tensor matrix_tensor() const;                                // copy, for fixed_linear
    Tensor transpose_tensor() const;

  private:
    DctBasis();
    std::array<float, kTileSize * kTileSize> b_;
};

/// Separable 2-d DCT per tile per channel: C = B X B^T.
TileStack dct2(const TileStack& tiles, Tape* tape = nullptr);

/// Exact inverse of dct2: X = B^T C B.
TileStack idct2(const TileStack& coeffs, Tape* tape = nullptr);

}  // namespace hdrpyr
