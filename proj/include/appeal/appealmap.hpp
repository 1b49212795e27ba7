// Copyright 2026 The appeal authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "appeal/backends.hpp"
#include "appeal/image.hpp"
#include "appeal/kernels.hpp"
#include "appeal/lexicon.hpp"
#include "appeal/models.hpp"
#include "appeal/synthesis.hpp"

namespace appeal {

struct HeatmapConfig {
    int window = 224;
    int stride = 32;
    std::string normalization = "minmax";

    /// Checks 0 < stride <= window <= min(width, height).
    void validate(int width, int height) const;
    friend bool operator==(const HeatmapConfig&, const HeatmapConfig&) = default;
};

inline constexpr std::string_view kDefaultNegativePrompt =
    "out of frame, lowres, text, error, cropped, worst quality, low quality, jpeg artifacts, ugly, duplicate, "
    "morbid, mutilated, out of frame, extra fingers, mutated hands, poorly drawn hands, poorly drawn face, "
    "mutation, deformed, blurry, dehydrated, bad anatomy, bad proportions, extra limbs, cloned face, disfigured, "
    "gross proportions, malformed limbs, missing arms, missing legs, extra arms, extra legs, fused fingers, too "
    "many fingers, long neck, username, watermark, signature,";

struct EnhanceConfig {
    double denoising_strength = 0.6;
    double guidance_scale = 7.0;
    std::string sampler = "DPM++ 2M Karras";
    std::string negative_prompt = std::string(kDefaultNegativePrompt);
    bool depth_conditioning = true;
    std::string depth_preprocessor = "depth_midas";
    std::uint64_t seed = 0;

    void validate() const;
    friend bool operator==(const EnhanceConfig&, const EnhanceConfig&) = default;
};

json to_json(const HeatmapConfig& c);
json to_json(const EnhanceConfig& c);

/// 0, stride, 2*stride, ... plus a final position flush with the far edge.
std::vector<int> window_positions(int extent, int window, int stride);

/// One score per window; geometry in `grid`, scores row-major over (ys, xs).
struct PatchGrid {
    int width = 0;
    int height = 0;
    kernels::WindowGrid grid;
    std::vector<double> scores;
};

using PatchScorer = std::function<std::vector<double>(std::span<const Image> patches)>;

PatchGrid patch_scores(const Image& image, const HeatmapConfig& cfg, const PatchScorer& scorer);
PatchGrid patch_scores(const Image& image, const HeatmapConfig& cfg, const EstimatorModel& estimator);

/// 1 - minmax(mean of covering window scores). Constant means give all zeros.
ScalarField build_heatmap(const PatchGrid& grid, const HeatmapConfig& cfg);
ScalarField build_heatmap(const Image& image, const PatchGrid& grid, const HeatmapConfig& cfg);

/// Inverse depth in [0,1]; nullopt (with a warning) when the backend fails.
std::optional<ScalarField> estimate_depth(const Image& image, DepthEstimator& depth);

/// Head noun of the first domain phrase, else of the first phrase, else "object".
std::string object_type_from_caption(std::string_view caption, std::span<const std::string> lexnames,
                                     const Lexicon& lexicon);

/// Inpaints with prompt "<token> <object_type>" under the soft heatmap mask.
/// Pixels where the heatmap is 0 keep their original bytes.
Image enhance(const Image& image, const std::string& object_type, const PolarityEmbedding* z_pos,
              const ScalarField& heatmap, const ScalarField* depth, const EnhanceConfig& cfg, Inpainter& inpainter);

/// Red tint proportional to the heatmap, for inspection.
Image heatmap_overlay(const Image& image, const ScalarField& heatmap, double opacity = 0.6);

}  // namespace appeal
