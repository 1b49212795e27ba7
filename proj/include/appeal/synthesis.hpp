// Copyright 2026 The appeal authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "appeal/backends.hpp"
#include "appeal/domain.hpp"
#include "appeal/image.hpp"

namespace appeal {

/// Learned token vector for one polarity (and, for negatives, one group).
struct PolarityEmbedding {
    std::vector<double> vector;
    Polarity polarity = Polarity::positive;
    std::optional<std::string> group;
    std::vector<std::string> trained_on;
};

json embedding_metadata(const PolarityEmbedding& e);

/// Writes `<path>` (raw little-endian doubles) and `<path>.json` (metadata).
void save_embedding(const PolarityEmbedding& e, const std::filesystem::path& path);
PolarityEmbedding load_embedding(const std::filesystem::path& path);

/// Positive embedding plus one negative embedding per group, keyed by group name.
struct EmbeddingSet {
    PolarityEmbedding positive;
    std::map<std::string, PolarityEmbedding> negatives;
};

PolarityEmbedding train_polarity_embedding(std::span<const Image> exemplars,
                                           std::span<const std::string> exemplar_ids, Polarity polarity,
                                           std::optional<std::string> group, InversionTrainer& trainer,
                                           const InversionParams& params = {});

/// alpha * z_pos + (1 - alpha) * z_neg.
Conditioning blend(const PolarityEmbedding& z_pos, const PolarityEmbedding& z_neg, double alpha);
std::vector<double> blend(std::span<const double> z_pos, std::span<const double> z_neg, double alpha);

/// clamp(k/2 + delta, 0, 1) for k in {0,1,2}, |delta| <= 0.2.
double sample_alpha(int k, double delta);

inline constexpr double kMaxAlphaJitter = 0.2;

struct InpaintOptions {
    double mask_threshold = 0.5;
    double strength = 1.0;
    double guidance_scale = 7.0;
    std::string sampler;
};

/// Regenerates the background (mask = binarize(1 - relevancy)) with an empty prompt.
Image diversify_background(const Image& image, const ScalarField& relevancy, std::uint64_t seed,
                           Inpainter& inpainter, const InpaintOptions& opts = {});

/// Regenerates the domain region (mask = binarize(relevancy)) with the caption
/// plus the placeholder token bound to `cond`.
Image adjust_appeal(const Image& image, const std::string& caption, const Conditioning& cond,
                    const ScalarField& relevancy, std::uint64_t seed, Inpainter& inpainter,
                    const InpaintOptions& opts = {});

/// Copies `generated` into `original` where mask is 1; everything else keeps
/// the original bytes.
Image composite(const Image& original, const Image& generated, const ScalarField& binary_mask);

struct SyntheticSample {
    std::string id;
    std::string base_id;
    int background = 0;  ///< variant index within the base
    std::uint64_t background_seed = 0;
    int slot = 0;        ///< alpha slot within the variant
    int k = 0;
    double delta = 0.0;
    double alpha = 0.0;
    std::string negative_group;
    std::string path;

    friend bool operator==(const SyntheticSample&, const SyntheticSample&) = default;
};

json to_json(const SyntheticSample& s);
SyntheticSample sample_from_json(const json& j);

/// Base image handed to the generator. `load` returns (image, relevancy) on demand.
struct SynthesisBase {
    std::string id;
    std::string caption;
    std::function<std::pair<Image, ScalarField>()> load;
};

struct SynthesisOptions {
    std::uint64_t run_seed = 0;
    InpaintOptions inpaint;
    /// Sample ids already on disk; they are reported again without regeneration.
    std::set<std::string> completed;
    /// Previously written manifest rows, reused for completed ids.
    std::map<std::string, SyntheticSample> previous;
};

struct SynthesisFailure {
    std::string base_id;
    std::string message;
};

struct SynthesisResult {
    std::vector<SyntheticSample> samples;  ///< base order, then background, then slot
    std::vector<SynthesisFailure> failures;
};

/// Receives each generated image and returns the path recorded in the manifest.
/// Called concurrently when the inpainter is reentrant.
using SampleSink = std::function<std::string(const SyntheticSample&, const Image&)>;

/// Planned (unrendered) samples of one base: ids, seeds, k, delta, alpha, group.
std::vector<SyntheticSample> plan_base(const std::string& base_id, const SynthesisPlan& plan,
                                       std::span<const std::string> groups, std::uint64_t run_seed);

SynthesisResult generate_synthetic_set(std::span<const SynthesisBase> bases, const SynthesisPlan& plan,
                                       const EmbeddingSet& embeddings, Inpainter& inpainter,
                                       const SampleSink& sink, const SynthesisOptions& opts = {});

}  // namespace appeal
