// Copyright 2026 The hdrpyr Authors
// SPDX-License-Identifier: Apache-2.0

#include "hdrpyr/nets.hpp"

#include <cmath>

#include "hdrpyr/dct.hpp"
#include "hdrpyr/errors.hpp"
#include "hdrpyr/rng.hpp"
#include "hdrpyr/tiles.hpp"

namespace hdrpyr {

const char* ordering_name(Ordering o) { return o == Ordering::DFTL ? "dftl" : "tfdl"; }

Ordering ordering_from_name(const std::string& name) {
    if (name == "dftl") return Ordering::DFTL;
    if (name == "tfdl") return Ordering::TFDL;
    throw ModelError("unknown ordering '" + name + "' (expected dftl or tfdl)");
}

Tensor DenoiserNet::multipliers(const Tensor& coeffs, Tape* tape) const {
    Tensor h = coeffs;
    for (int i = 0; i < kLayers; ++i) {
        const Activation act = (i + 1 == kLayers) ? Activation::Sigmoid : Activation::Relu;
        h = pointwise_linear(h, weights[i], biases[i], act, tape);
    }
    return h;
}

Tensor ToneMapperNet::forward(const Tensor& x, Tape* tape) const {
    if (x.shape().size() != 3 || x.shape()[2] != 3) {
        throw ShapeError("ToneMapperNet: input must be [H,W,3]");
    }
    if (x.shape()[0] < 4 || x.shape()[1] < 4) {
        throw ShapeError("ToneMapperNet: input too small for the condition path");
    }

    Tensor c = activation(conv3x3_stride2(x, cw1, cb1, tape), Activation::Relu, tape);
    c = activation(conv3x3_stride2(c, cw2, cb2, tape), Activation::Relu, tape);
    c = activation(conv3x3_stride2(c, cw3, cb3, tape), Activation::Relu, tape);
    Tensor cond = global_avg_pool(c, tape);

    Tensor s1 = affine(pointwise_linear(cond, ms1w, ms1b, Activation::None, tape), 1.0f, 1.0f, tape);
    Tensor t1 = pointwise_linear(cond, mt1w, mt1b, Activation::None, tape);
    Tensor s2 = affine(pointwise_linear(cond, ms2w, ms2b, Activation::None, tape), 1.0f, 1.0f, tape);
    Tensor t2 = pointwise_linear(cond, mt2w, mt2b, Activation::None, tape);

    Tensor h1 = activation(film(pointwise_linear(x, w1, b1, Activation::None, tape), s1, t1, tape),
                           Activation::Relu, tape);
    Tensor h2 = activation(film(pointwise_linear(h1, w2, b2, Activation::None, tape), s2, t2, tape),
                           Activation::Relu, tape);
    return pointwise_linear(h2, w3, b3, Activation::Sigmoid, tape);
}

namespace {

void collect_tonemapper(const ToneMapperNet& tm, const std::string& prefix,
                        std::vector<std::pair<std::string, Tensor>>& out) {
    out.emplace_back(prefix + ".base1.weight", tm.w1);
    out.emplace_back(prefix + ".base1.bias", tm.b1);
    out.emplace_back(prefix + ".base2.weight", tm.w2);
    out.emplace_back(prefix + ".base2.bias", tm.b2);
    out.emplace_back(prefix + ".base3.weight", tm.w3);
    out.emplace_back(prefix + ".base3.bias", tm.b3);
    out.emplace_back(prefix + ".cond1.weight", tm.cw1);
    out.emplace_back(prefix + ".cond1.bias", tm.cb1);
    out.emplace_back(prefix + ".cond2.weight", tm.cw2);
    out.emplace_back(prefix + ".cond2.bias", tm.cb2);
    out.emplace_back(prefix + ".cond3.weight", tm.cw3);
    out.emplace_back(prefix + ".cond3.bias", tm.cb3);
    out.emplace_back(prefix + ".mod1.scale.weight", tm.ms1w);
    out.emplace_back(prefix + ".mod1.scale.bias", tm.ms1b);
    out.emplace_back(prefix + ".mod1.shift.weight", tm.mt1w);
    out.emplace_back(prefix + ".mod1.shift.bias", tm.mt1b);
    out.emplace_back(prefix + ".mod2.scale.weight", tm.ms2w);
    out.emplace_back(prefix + ".mod2.scale.bias", tm.ms2b);
    out.emplace_back(prefix + ".mod2.shift.weight", tm.mt2w);
    out.emplace_back(prefix + ".mod2.shift.bias", tm.mt2b);
}

void collect_denoiser(const DenoiserNet& dn, const std::string& prefix,
                      std::vector<std::pair<std::string, Tensor>>& out) {
    for (int i = 0; i < DenoiserNet::kLayers; ++i) {
        out.emplace_back(prefix + ".layer" + std::to_string(i + 1) + ".weight", dn.weights[i]);
        out.emplace_back(prefix + ".layer" + std::to_string(i + 1) + ".bias", dn.biases[i]);
    }
}

}  // namespace

std::vector<std::pair<std::string, Tensor>> ModelBundle::named_params() const {
    std::vector<std::pair<std::string, Tensor>> out;
    for (int i = 0; i < kPyramidLevels; ++i) {
        collect_tonemapper(tonemappers[i], "tm" + std::to_string(i), out);
    }
    for (int i = 0; i < kPyramidLevels - 1; ++i) {
        collect_denoiser(denoisers[i], "dn" + std::to_string(i), out);
    }
    return out;
}

std::vector<Tensor> ModelBundle::tonemapper_params() const {
    std::vector<std::pair<std::string, Tensor>> named;
    for (int i = 0; i < kPyramidLevels; ++i) {
        collect_tonemapper(tonemappers[i], "tm" + std::to_string(i), named);
    }
    std::vector<Tensor> out;
    out.reserve(named.size());
    for (auto& [name, t] : named) out.push_back(t);
    return out;
}

std::vector<Tensor> ModelBundle::denoiser_params() const {
    std::vector<std::pair<std::string, Tensor>> named;
    for (int i = 0; i < kPyramidLevels - 1; ++i) {
        collect_denoiser(denoisers[i], "dn" + std::to_string(i), named);
    }
    std::vector<Tensor> out;
    out.reserve(named.size());
    for (auto& [name, t] : named) out.push_back(t);
    return out;
}

void ModelBundle::set_tonemapper_grad(bool on) {
    for (Tensor& t : tonemapper_params()) t.set_requires_grad(on);
}

void ModelBundle::set_denoiser_grad(bool on) {
    for (Tensor& t : denoiser_params()) t.set_requires_grad(on);
}

namespace {

Tensor fan_in_weight(Rng& rng, std::vector<int> shape, int fan_in) {
    Tensor t = Tensor::zeros(std::move(shape));
    const float bound = 1.0f / std::sqrt(static_cast<float>(fan_in));
    for (float& v : t.values()) v = rng.uniform(-bound, bound);
    t.set_requires_grad(true);
    return t;
}

Tensor zero_param(std::vector<int> shape) {
    Tensor t = Tensor::zeros(std::move(shape));
    t.set_requires_grad(true);
    return t;
}

ToneMapperNet init_tonemapper(Rng& rng, int h) {
    ToneMapperNet tm;
    tm.hidden = h;
    tm.w1 = fan_in_weight(rng, {h, 3}, 3);
    tm.b1 = zero_param({h});
    tm.w2 = fan_in_weight(rng, {h, h}, h);
    tm.b2 = zero_param({h});
    tm.w3 = fan_in_weight(rng, {3, h}, h);
    tm.b3 = zero_param({3});
    tm.cw1 = fan_in_weight(rng, {16, 3, 3, 3}, 9 * 3);
    tm.cb1 = zero_param({16});
    tm.cw2 = fan_in_weight(rng, {32, 3, 3, 16}, 9 * 16);
    tm.cb2 = zero_param({32});
    tm.cw3 = fan_in_weight(rng, {64, 3, 3, 32}, 9 * 32);
    tm.cb3 = zero_param({64});
    // Identity modulation at init: scale 1, shift 0 regardless of the input.
    tm.ms1w = zero_param({h, 64});
    tm.ms1b = zero_param({h});
    tm.mt1w = zero_param({h, 64});
    tm.mt1b = zero_param({h});
    tm.ms2w = zero_param({h, 64});
    tm.ms2b = zero_param({h});
    tm.mt2w = zero_param({h, 64});
    tm.mt2b = zero_param({h});
    return tm;
}

DenoiserNet init_denoiser(Rng& rng, int h) {
    DenoiserNet dn;
    dn.hidden = h;
    const int widths[DenoiserNet::kLayers + 1] = {3, h, h, h, h, 3};
    for (int i = 0; i < DenoiserNet::kLayers; ++i) {
        if (i + 1 == DenoiserNet::kLayers) {
            dn.weights[i] = zero_param({widths[i + 1], widths[i]});
            dn.biases[i] = zero_param({widths[i + 1]});
            for (float& v : dn.biases[i].values()) v = 2.0f;  // sigmoid(2) ~ 0.88
        } else {
            dn.weights[i] = fan_in_weight(rng, {widths[i + 1], widths[i]}, widths[i]);
            dn.biases[i] = zero_param({widths[i + 1]});
        }
    }
    return dn;
}

}  // namespace

ModelBundle init_weights(std::uint64_t seed, Ordering ordering, int denoiser_hidden,
                         int tonemapper_hidden) {
    Rng rng(seed);
    ModelBundle bundle;
    bundle.ordering = ordering;
    for (int i = 0; i < kPyramidLevels; ++i) {
        bundle.tonemappers[i] = init_tonemapper(rng, tonemapper_hidden);
    }
    for (int i = 0; i < kPyramidLevels - 1; ++i) {
        bundle.denoisers[i] = init_denoiser(rng, denoiser_hidden);
    }
    return bundle;
}

Tensor denoise_level(const Tensor& x, const DenoiserNet& net, Tape* tape) {
    TileStack stack = extract_tiles(x, kTileStride, tape);
    TileStack coeffs = dct2(stack, tape);
    Tensor mult = net.multipliers(coeffs.tiles, tape);
    TileStack denoised;
    denoised.tiles = hadamard(coeffs.tiles, mult, tape);
    denoised.origins = coeffs.origins;
    denoised.source_h = coeffs.source_h;
    denoised.source_w = coeffs.source_w;
    TileStack pixels = idct2(denoised, tape);
    return merge_tiles_average(pixels, tape);
}

Tensor tonemap_level(const Tensor& x, const ToneMapperNet& net, bool signed_level,
                     Tape* tape) {
    if (!signed_level) return net.forward(x, tape);
    Tensor remapped = affine(x, 0.5f, 0.5f, tape);
    Tensor y = net.forward(remapped, tape);
    return affine(y, 2.0f, -1.0f, tape);
}

namespace {

std::int64_t count_params(const ModelBundle& bundle) {
    std::int64_t n = 0;
    for (const auto& [name, t] : bundle.named_params()) n += t.size();
    return n;
}

std::int64_t pointwise_chain_macs(std::int64_t pixels, const std::vector<int>& widths) {
    std::int64_t per_px = 0;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i)
        per_px += static_cast<std::int64_t>(widths[i]) * widths[i + 1];
    return pixels * per_px;
}

}  // namespace

ParamStats param_stats(const ModelBundle& bundle) {
    ParamStats stats;
    stats.params = count_params(bundle);

    constexpr int kPatch = 224;
    for (int i = 0; i < kPyramidLevels; ++i) {
        const int s = kPatch >> i;
        const std::int64_t px = static_cast<std::int64_t>(s) * s;
        const int h = bundle.tonemappers[i].hidden;
        stats.macs_per_patch += pointwise_chain_macs(px, {3, h, h, 3});
        const std::int64_t c1 = static_cast<std::int64_t>((s + 1) / 2) * ((s + 1) / 2);
        const std::int64_t c2 = static_cast<std::int64_t>((s + 3) / 4) * ((s + 3) / 4);
        const std::int64_t c3 = static_cast<std::int64_t>((s + 7) / 8) * ((s + 7) / 8);
        stats.macs_per_patch += c1 * 9 * 3 * 16 + c2 * 9 * 16 * 32 + c3 * 9 * 32 * 64;
        stats.macs_per_patch += 4LL * 64 * h;  // modulation linears
    }
    for (int i = 0; i < kPyramidLevels - 1; ++i) {
        const int s = kPatch >> i;
        const std::int64_t per_axis =
            static_cast<std::int64_t>(tile_origins(s, kTileSize, kTileStride).size());
        const std::int64_t tiles = per_axis * per_axis;
        const int h = bundle.denoisers[i].hidden;
        stats.macs_per_patch +=
            pointwise_chain_macs(tiles * kTileSize * kTileSize, {3, h, h, h, h, 3});
    }
    return stats;
}

}  // namespace hdrpyr
