// Copyright 2026 The hdrpyr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hdrpyr/pyramid.hpp"
#include "hdrpyr/tensor.hpp"

namespace hdrpyr {

/// Order of the two per-level operators: denoise-first/tone-map-last or
/// tone-map-first/denoise-last.
enum class Ordering : std::uint8_t { DFTL = 0, TFDL = 1 };

const char* ordering_name(Ordering o);
Ordering ordering_from_name(const std::string& name);

/// Frequency-coefficient re-weighting network: five pointwise layers
/// (3 -> h -> h -> h -> h -> 3), relu between, sigmoid output. Pointwise
/// layers mix channels at one coefficient position and never across
/// positions, so each frequency is re-weighted independently.
struct DenoiserNet {
    static constexpr int kLayers = 5;
    std::array<Tensor, kLayers> weights;
    std::array<Tensor, kLayers> biases;
    int hidden = 32;

    /// Multiplier map in (0,1), same shape as the coefficient input.
    Tensor multipliers(const Tensor& coeffs, Tape* tape = nullptr) const;
};

/// Conditional per-pixel tone curve. The base path is three pointwise layers
/// (3 -> h -> h -> 3) with sigmoid output; a condition path of three strided
/// 3x3 convolutions (widths 16/32/64) pooled to a global vector modulates the
/// two hidden feature maps with per-channel scale and shift. With scale 1 and
/// shift 0 the base path alone determines the output.
struct ToneMapperNet {
    int hidden = 64;
    Tensor w1, b1, w2, b2, w3, b3;
    Tensor cw1, cb1, cw2, cb2, cw3, cb3;
    Tensor ms1w, ms1b, mt1w, mt1b;
    Tensor ms2w, ms2b, mt2w, mt2b;

    /// x in [0,1], any H,W >= 4; output in (0,1).
    Tensor forward(const Tensor& x, Tape* tape = nullptr) const;
};

/// One tone-mapper per pyramid level (incl. base) and one denoiser per detail
/// level; the base level is only tone-mapped.
struct ModelBundle {
    std::array<ToneMapperNet, kPyramidLevels> tonemappers;
    std::array<DenoiserNet, kPyramidLevels - 1> denoisers;
    Ordering ordering = Ordering::TFDL;

    /// Stable enumeration used by the optimizer and the checkpoint format.
    std::vector<std::pair<std::string, Tensor>> named_params() const;
    std::vector<Tensor> tonemapper_params() const;
    std::vector<Tensor> denoiser_params() const;

    void set_tonemapper_grad(bool on);
    void set_denoiser_grad(bool on);
};

/// Fan-in scaled random init. The denoiser output layer starts at zero
/// weights with bias +2, so initial multipliers are ~0.88 (near
/// pass-through); modulation layers start at identity (scale 1, shift 0).
ModelBundle init_weights(std::uint64_t seed, Ordering ordering = Ordering::TFDL,
                         int denoiser_hidden = 32, int tonemapper_hidden = 64);

/// Full frequency-domain denoising chain: tiles -> DCT -> multiplier ->
/// coefficient product -> inverse DCT -> overlap average.
Tensor denoise_level(const Tensor& x, const DenoiserNet& net, Tape* tape = nullptr);

/// Tone-map one pyramid level. Detail levels are signed: they enter the net
/// through x' = (x+1)/2 and leave through 2y-1; the base level maps directly.
Tensor tonemap_level(const Tensor& x, const ToneMapperNet& net, bool signed_level,
                     Tape* tape = nullptr);

struct ParamStats {
    std::int64_t params = 0;
    std::int64_t macs_per_patch = 0;  // for one 224x224x3 patch
};

/// Learnable parameter count and multiply-accumulate count (weight-activation
/// products of the linear/conv layers) for one 224x224x3 patch.
ParamStats param_stats(const ModelBundle& bundle);

}  // namespace hdrpyr
