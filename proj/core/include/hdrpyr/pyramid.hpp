// Copyright 2026 The hdrpyr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>

#include "hdrpyr/tensor.hpp"

namespace hdrpyr {

inline constexpr int kPyramidLevels = 4;  // 3 detail levels + base

/// Four-level decomposition of a patch: detail (Laplacian) levels at full,
/// half and quarter resolution plus the coarsest Gaussian level as base.
struct Pyramid {
    std::array<Tensor, kPyramidLevels - 1> laplacian;
    Tensor base;
};

/// Binomial-blur then take even pixels; halves both spatial dims.
Tensor pyr_down(const Tensor& x, Tape* tape = nullptr);

/// Zero-insertion upsample followed by the doubled blur; preserves constants
/// and doubles both spatial dims.
Tensor pyr_up(const Tensor& x, Tape* tape = nullptr);

/// g0 = patch, g_{i+1} = down(g_i), l_i = g_i - up(g_{i+1}), base = g3.
/// Requires H and W divisible by 2^(levels-1).
Pyramid decompose(const Tensor& patch, Tape* tape = nullptr);

/// Exact inverse of decompose: repeatedly upsample and add detail levels.
Tensor reconstruct(const Tensor& l0, const Tensor& l1, const Tensor& l2,
                   const Tensor& base, Tape* tape = nullptr);

}  // namespace hdrpyr
