// Copyright 2026 The appeal authors
// SPDX-License-Identifier: Apache-2.0

// Deterministic stand-ins for every backend role. They make the whole pipeline
// runnable at desk scale; see mock_contracts() for the behaviour table.

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "appeal/backends.hpp"

namespace appeal::mock {

/// Toy appeal rendering: saturation of the regenerated region is linear in alpha.
inline constexpr double kToyMinSaturation = 0.2;
inline constexpr double kToyMaxSaturation = 0.9;
/// Hue (degrees) that toy domain objects are painted with and the mock segmenter keys on.
inline constexpr double kToyHue = 30.0;

/// Keeps the pixel's value (brightness), sets hue and saturation from alpha.
Rgb render_appeal(Rgb original, double alpha, double hue = kToyHue) noexcept;

/// Mock inversion vectors carry polarity in channel 0, so a blended vector's
/// channel 0 equals its alpha.
double alpha_from_conditioning(const Conditioning& cond) noexcept;

/// Unsaturated background texture keyed by `key`: dark or light grey levels
/// on a coarse 3x3 lattice, bilinearly interpolated, plus +-15 per-pixel noise.
Rgb toy_background(std::uint64_t key, int x, int y, int width, int height) noexcept;

/// Toy scene: textured grey background plus a disk of the key hue whose
/// saturation encodes alpha. Disk position, brightness and background are nuisance.
Image toy_scene(int size, double alpha, std::uint64_t seed);

class MockCaptioner final : public Captioner {
public:
    MockCaptioner(std::map<std::string, std::string> by_id, std::optional<std::string> fallback);
    std::string id() const override { return "mock-captioner"; }
    std::string caption(const Image& image, std::string_view image_id) override;

private:
    std::map<std::string, std::string> by_id_;
    std::optional<std::string> fallback_;
};

class MockSegmenter final : public Segmenter {
public:
    struct Options {
        double key_hue = kToyHue;
        double hue_tolerance = 25.0;
        double min_saturation = 0.08;
        /// Per-word key hues; the first word of a phrase found here wins.
        std::map<std::string, double> word_hues;
    };

    MockSegmenter() = default;
    explicit MockSegmenter(Options options) : options_(std::move(options)) {}
    std::string id() const override { return "mock-segmenter"; }
    ScalarField segment(const Image& image, std::string_view phrase) override;

private:
    Options options_;
};

class MockInpainter final : public Inpainter {
public:
    enum class Mode {
        fill,  ///< solid colour keyed by (seed, conditioning hash)
        toy,   ///< renders alpha as saturation; background fills are textured grey
    };

    explicit MockInpainter(Mode mode = Mode::fill, double hue = kToyHue) : mode_(mode), hue_(hue) {}
    std::string id() const override { return "mock-inpainter"; }
    Image inpaint(const InpaintRequest& request) override;
    bool binarizes_mask() const override { return true; }
    Mode mode() const noexcept { return mode_; }

    static constexpr double kMaskThreshold = 0.5;

private:
    Mode mode_;
    double hue_;
};

class MockInversionTrainer final : public InversionTrainer {
public:
    explicit MockInversionTrainer(std::size_t dimension = 16) : dimension_(dimension) {}
    std::string id() const override { return "mock-inversion"; }
    std::size_t dimension() const override { return dimension_; }
    std::vector<double> train(std::span<const Image> exemplars,
                              std::span<const std::string> exemplar_ids, Polarity polarity,
                              const InversionParams& params) override;

private:
    std::size_t dimension_;
};

class MockUpscaler final : public Upscaler {
public:
    std::string id() const override { return "mock-upscaler"; }
    int factor() const override { return 2; }
    Image upscale(const Image& image) override;
};

class MockDepth final : public DepthEstimator {
public:
    std::string id() const override { return "mock-depth"; }
    ScalarField estimate(const Image& image) override;
};

/// Fixed-seed Gaussian random projection of a grid x grid RGB downsample.
class MockEncoder final : public ImageEncoder, public TrainableEncoder {
public:
    explicit MockEncoder(int dimension = 64, int grid = 16, std::uint64_t seed = 1234);

    std::string id() const override { return "mock-encoder"; }
    int dimension() const override { return static_cast<int>(weights_.rows()); }
    Eigen::VectorXd encode(const Image& image) const override;
    std::shared_ptr<ImageEncoder> clone() const override;
    TrainableEncoder* trainable() noexcept override { return this; }
    const TrainableEncoder* trainable() const noexcept override { return this; }

    int input_dimension() const override { return 3 * grid_ * grid_; }
    Eigen::VectorXd preprocess(const Image& image) const override;
    Eigen::MatrixXd& weights() noexcept override { return weights_; }
    const Eigen::MatrixXd& weights() const noexcept override { return weights_; }

private:
    int grid_;
    Eigen::MatrixXd weights_;
};

/// Serves `<corpus>/<query-slug>/<rank>.png`.
class MockImageSource final : public ImageSource {
public:
    explicit MockImageSource(std::filesystem::path corpus, int delay_ms = 0)
        : corpus_(std::move(corpus)), delay_ms_(delay_ms) {}
    std::string id() const override { return "mock-source"; }
    std::vector<SourceHit> search(const SearchQuery& query, int top_k) override;

private:
    std::filesystem::path corpus_;
    int delay_ms_;
};

}  // namespace appeal::mock
