// Copyright 2026 The appeal authors
// SPDX-License-Identifier: Apache-2.0

#include "appeal/appealmap.hpp"

#include <algorithm>
#include <cmath>

#include <spdlog/spdlog.h>

#include "appeal/error.hpp"
#include "appeal/relevancy.hpp"

namespace appeal {

void HeatmapConfig::validate(int width, int height) const {
    if (stride <= 0) throw ValidationError("heatmap.stride", "must be > 0");
    if (window < stride) throw ValidationError("heatmap.window", "must be >= stride");
    if (normalization != "minmax") throw ValidationError("heatmap.normalization", "only 'minmax' is supported");
    if (window > std::min(width, height))
        throw ValidationError("heatmap.window", "window " + std::to_string(window) + " exceeds the " +
                                                    std::to_string(width) + "x" + std::to_string(height) +
                                                    " image; use a window of at most " +
                                                    std::to_string(std::min(width, height)));
}

void EnhanceConfig::validate() const {
    if (!(denoising_strength > 0.0 && denoising_strength <= 1.0))
        throw ValidationError("enhance.denoising_strength", "must be in (0,1]");
    if (!(guidance_scale > 0.0)) throw ValidationError("enhance.guidance_scale", "must be > 0");
}

json to_json(const HeatmapConfig& c) {
    return json{{"window", c.window}, {"stride", c.stride}, {"normalization", c.normalization}};
}

json to_json(const EnhanceConfig& c) {
    return json{{"denoising_strength", c.denoising_strength}, {"guidance_scale", c.guidance_scale},
                {"sampler", c.sampler},                       {"negative_prompt", c.negative_prompt},
                {"depth_conditioning", c.depth_conditioning}, {"depth_preprocessor", c.depth_preprocessor},
                {"seed", c.seed}};
}

std::vector<int> window_positions(int extent, int window, int stride) {
    if (stride <= 0 || window <= 0 || window > extent) throw std::invalid_argument("window_positions: bad geometry");
    std::vector<int> out;
    for (int p = 0; p + window <= extent; p += stride) out.push_back(p);
    if (out.back() + window != extent) out.push_back(extent - window);
    return out;
}

PatchGrid patch_scores(const Image& image, const HeatmapConfig& cfg, const PatchScorer& scorer) {
    cfg.validate(image.width(), image.height());
    PatchGrid g;
    g.width = image.width();
    g.height = image.height();
    g.grid = {window_positions(image.width(), cfg.window, cfg.stride),
              window_positions(image.height(), cfg.window, cfg.stride), cfg.window};
    std::vector<Image> patches;
    patches.reserve(g.grid.xs.size() * g.grid.ys.size());
    for (int y : g.grid.ys)
        for (int x : g.grid.xs) patches.push_back(crop(image, x, y, cfg.window, cfg.window));
    g.scores = scorer(patches);
    if (g.scores.size() != patches.size())
        throw BackendError("patch scorer returned " + std::to_string(g.scores.size()) + " scores for " +
                               std::to_string(patches.size()) + " patches",
                           false);
    return g;
}

PatchGrid patch_scores(const Image& image, const HeatmapConfig& cfg, const EstimatorModel& estimator) {
    return patch_scores(image, cfg, [&](std::span<const Image> p) { return estimator.predict_batch(p); });
}

ScalarField build_heatmap(const PatchGrid& g, const HeatmapConfig& cfg) {
    if (g.grid.window != cfg.window || g.scores.size() != g.grid.xs.size() * g.grid.ys.size())
        throw std::invalid_argument("build_heatmap: grid geometry does not match the configuration");
    const auto n = static_cast<std::size_t>(g.width) * static_cast<std::size_t>(g.height);
    std::vector<double> sums(n);
    std::vector<int> counts(n);
    kernels::omp::accumulate_windows(g.grid, g.scores, g.width, g.height, sums, counts);
    ScalarField mean(g.width, g.height);
    auto values = mean.values();
    for (std::size_t i = 0; i < n; ++i) {
        if (counts[i] == 0) throw std::logic_error("build_heatmap: uncovered pixel");
        values[i] = sums[i] / counts[i];
    }
    const double lo = mean.min(), hi = mean.max();
    ScalarField out(g.width, g.height, 0.0);
    // Means of equal scores can differ in the last bit; treat them as constant.
    if (hi - lo <= 1e-12 * std::max(1.0, std::max(std::abs(lo), std::abs(hi)))) return out;
    auto ov = out.values();
    for (std::size_t i = 0; i < n; ++i) ov[i] = 1.0 - (values[i] - lo) / (hi - lo);
    return out;
}

ScalarField build_heatmap(const Image& image, const PatchGrid& g, const HeatmapConfig& cfg) {
    if (g.width != image.width() || g.height != image.height())
        throw std::invalid_argument("build_heatmap: grid was computed for a different image size");
    return build_heatmap(g, cfg);
}

std::optional<ScalarField> estimate_depth(const Image& image, DepthEstimator& depth) {
    try {
        ScalarField d = depth.estimate(image);
        if (!d.same_shape(image)) {
            spdlog::warn("depth backend {} returned a mis-sized map; enhancing without depth", depth.id());
            return std::nullopt;
        }
        d.clamp01();
        return d;
    } catch (const std::exception& e) {
        spdlog::warn("depth estimation failed ({}); enhancing without depth", e.what());
        return std::nullopt;
    }
}

std::string object_type_from_caption(std::string_view caption, std::span<const std::string> lexnames,
                                     const Lexicon& lexicon) {
    const PhraseSet phrases = extract_domain_phrases(caption, lexnames, lexicon);
    if (!phrases.domain_phrases.empty()) return head_noun(phrases.domain_phrases.front(), lexicon);
    if (!phrases.all_phrases.empty()) return head_noun(phrases.all_phrases.front(), lexicon);
    return "object";
}

Image enhance(const Image& image, const std::string& object_type, const PolarityEmbedding* z_pos,
              const ScalarField& heatmap, const ScalarField* depth, const EnhanceConfig& cfg, Inpainter& inpainter) {
    cfg.validate();
    if (!z_pos) throw ValidationError("embedding", "enhancement needs the positive embedding");
    if (!heatmap.same_shape(image)) throw ValidationError("heatmap", "heatmap does not match the image size");
    if (heatmap.max() <= 0.0) return image;
    InpaintRequest req{image,
                       heatmap,
                       std::string(kPlaceholderToken) + " " + object_type,
                       Conditioning{z_pos->vector},
                       cfg.negative_prompt,
                       cfg.seed,
                       cfg.denoising_strength,
                       cfg.guidance_scale,
                       cfg.sampler,
                       cfg.depth_conditioning ? depth : nullptr};
    const Image generated = inpainter.inpaint(req);
    ScalarField support(image.width(), image.height());
    auto sv = support.values();
    auto hv = heatmap.values();
    for (std::size_t i = 0; i < sv.size(); ++i) sv[i] = hv[i] > 0.0 ? 1.0 : 0.0;
    return composite(image, generated, support);
}

Image heatmap_overlay(const Image& image, const ScalarField& heatmap, double opacity) {
    if (!heatmap.same_shape(image)) throw ValidationError("heatmap", "heatmap does not match the image size");
    Image out = image;
    for (int y = 0; y < out.height(); ++y)
        for (int x = 0; x < out.width(); ++x) {
            const double a = std::clamp(heatmap.at(x, y), 0.0, 1.0) * opacity;
            const Rgb p = image.pixel(x, y);
            auto mix = [a](std::uint8_t c, double target) {
                return static_cast<std::uint8_t>(std::lround((1.0 - a) * c + a * target));
            };
            out.set(x, y, {mix(p.r, 255.0), mix(p.g, 0.0), mix(p.b, 0.0)});
        }
    return out;
}

}  // namespace appeal
