// Copyright 2026 The appeal authors
// SPDX-License-Identifier: Apache-2.0

#include "appeal/mocks.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <sstream>
#include <thread>

#include "appeal/error.hpp"
#include "appeal/kernels.hpp"

namespace appeal::mock {

Rgb render_appeal(Rgb original, double alpha, double hue) noexcept {
    alpha = std::clamp(alpha, 0.0, 1.0);
    Hsv hsv = to_hsv(original);
    hsv.h = hue;
    hsv.s = kToyMinSaturation + (kToyMaxSaturation - kToyMinSaturation) * alpha;
    return from_hsv(hsv);
}

double alpha_from_conditioning(const Conditioning& cond) noexcept {
    if (cond.vector.empty()) return 0.0;
    return std::clamp(cond.vector.front(), 0.0, 1.0);
}

Rgb toy_background(std::uint64_t key, int x, int y, int width, int height) noexcept {
    constexpr int kNodes = 3;
    auto node = [key](int i, int j) {
        const std::uint64_t h = splitmix64(key ^ (0x9e37ULL * static_cast<std::uint64_t>(i * kNodes + j + 1)));
        return ((h >> 8) & 1 ? 215.0 : 10.0) + static_cast<double>(h % 31);
    };
    const double fx = (x + 0.5) / width * (kNodes - 1), fy = (y + 0.5) / height * (kNodes - 1);
    const int ix = std::min(static_cast<int>(fx), kNodes - 2), iy = std::min(static_cast<int>(fy), kNodes - 2);
    const double tx = fx - ix, ty = fy - iy;
    const double level = (1 - ty) * ((1 - tx) * node(iy, ix) + tx * node(iy, ix + 1)) +
                         ty * ((1 - tx) * node(iy + 1, ix) + tx * node(iy + 1, ix + 1));
    const std::uint64_t n =
        splitmix64(key ^ (static_cast<std::uint64_t>(y) << 32 | static_cast<std::uint64_t>(x)));
    const auto g = static_cast<std::uint8_t>(std::clamp(level + static_cast<double>(n % 31) - 15.0, 0.0, 255.0));
    return {g, g, g};
}

Image toy_scene(int size, double alpha, std::uint64_t seed) {
    SplitMix rng(seed);
    Image image(size, size);
    const std::uint64_t background = rng.next();
    const double cx = rng.uniform(0.35, 0.65) * size, cy = rng.uniform(0.35, 0.65) * size;
    const double r = 0.18 * size;
    const double value = rng.uniform(0.7, 1.0);
    const double sat = kToyMinSaturation + (kToyMaxSaturation - kToyMinSaturation) * alpha;
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
            if (dx * dx + dy * dy <= r * r) {
                const double v = std::clamp(value + rng.uniform(-0.04, 0.04), 0.0, 1.0);
                image.set(x, y, from_hsv({kToyHue, sat, v}));
            } else {
                image.set(x, y, toy_background(background, x, y, size, size));
            }
        }
    return image;
}

// --- captioner ---------------------------------------------------------------

MockCaptioner::MockCaptioner(std::map<std::string, std::string> by_id,
                             std::optional<std::string> fallback)
    : by_id_(std::move(by_id)), fallback_(std::move(fallback)) {}

std::string MockCaptioner::caption(const Image&, std::string_view image_id) {
    if (auto it = by_id_.find(std::string(image_id)); it != by_id_.end()) return it->second;
    if (fallback_) return *fallback_;
    throw BackendError("mock-captioner: no caption for " + std::string(image_id), false);
}

// --- segmenter ---------------------------------------------------------------

ScalarField MockSegmenter::segment(const Image& image, std::string_view phrase) {
    double key = options_.key_hue;
    std::istringstream words{std::string(phrase)};
    for (std::string w; words >> w;) {
        std::transform(w.begin(), w.end(), w.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (auto it = options_.word_hues.find(w); it != options_.word_hues.end()) {
            key = it->second;
            break;
        }
    }
    ScalarField out(image.width(), image.height());
    for (int y = 0; y < image.height(); ++y)
        for (int x = 0; x < image.width(); ++x) {
            const Hsv hsv = to_hsv(image.pixel(x, y));
            double d = std::abs(hsv.h - key);
            d = std::min(d, 360.0 - d);
            out.at(x, y) = (hsv.s >= options_.min_saturation && d <= options_.hue_tolerance) ? 1.0 : 0.0;
        }
    return out;
}

// --- inpainter ---------------------------------------------------------------

Image MockInpainter::inpaint(const InpaintRequest& req) {
    if (!req.mask.same_shape(req.image))
        throw BackendError("mock-inpainter: mask shape does not match image", false);
    Image out = req.image;
    const std::uint64_t key = splitmix64(req.seed ^ (req.token ? req.token->hash() : 0x5eedULL));
    const bool render = mode_ == Mode::toy && req.token.has_value();
    const double alpha = render ? alpha_from_conditioning(*req.token) : 0.0;
    const Rgb solid{static_cast<std::uint8_t>(key & 0xff), static_cast<std::uint8_t>((key >> 8) & 0xff),
                    static_cast<std::uint8_t>((key >> 16) & 0xff)};
    for (int y = 0; y < out.height(); ++y)
        for (int x = 0; x < out.width(); ++x) {
            if (req.mask.at(x, y) < kMaskThreshold) continue;
            if (render) {
                out.set(x, y, render_appeal(req.image.pixel(x, y), alpha, hue_));
            } else if (mode_ == Mode::toy) {
                out.set(x, y, toy_background(key, x, y, out.width(), out.height()));
            } else {
                out.set(x, y, solid);
            }
        }
    return out;
}

// --- inversion ---------------------------------------------------------------

std::vector<double> MockInversionTrainer::train(std::span<const Image> exemplars,
                                                std::span<const std::string> exemplar_ids,
                                                Polarity polarity, const InversionParams&) {
    if (exemplars.empty() || exemplars.size() != exemplar_ids.size())
        throw BackendError("mock-inversion: need one id per exemplar", false);
    std::vector<std::string> ids(exemplar_ids.begin(), exemplar_ids.end());
    std::sort(ids.begin(), ids.end());
    std::uint64_t h = 0;
    for (const auto& id : ids) h = splitmix64(h ^ fnv1a(id));
    SplitMix rng(h);
    std::vector<double> v(dimension_);
    v[0] = polarity == Polarity::positive ? 1.0 : 0.0;
    for (std::size_t i = 1; i < v.size(); ++i) v[i] = rng.uniform(-1.0, 1.0);
    return v;
}

// --- upscaler / depth --------------------------------------------------------

Image MockUpscaler::upscale(const Image& image) {
    return resize_bicubic(image, image.width() * 2, image.height() * 2);
}

ScalarField MockDepth::estimate(const Image& image) {
    ScalarField out(image.width(), image.height());
    for (int y = 0; y < image.height(); ++y)
        for (int x = 0; x < image.width(); ++x) out.at(x, y) = luminance(image.pixel(x, y));
    return out;
}

// --- encoder -----------------------------------------------------------------

MockEncoder::MockEncoder(int dimension, int grid, std::uint64_t seed) : grid_(grid) {
    if (dimension <= 0 || grid <= 0) throw std::invalid_argument("mock-encoder: bad shape");
    const int in = 3 * grid * grid;
    weights_.resize(dimension, in);
    SplitMix rng(seed);
    const double scale = 1.0 / std::sqrt(static_cast<double>(in));
    for (int r = 0; r < dimension; ++r)
        for (int c = 0; c < in; ++c) weights_(r, c) = rng.normal() * scale;
}

Eigen::VectorXd MockEncoder::preprocess(const Image& image) const {
    Eigen::VectorXd x(input_dimension());
    kernels::omp::downsample_rgb(image, grid_, std::span<double>(x.data(), static_cast<std::size_t>(x.size())));
    return x;
}

Eigen::VectorXd MockEncoder::encode(const Image& image) const { return weights_ * preprocess(image); }

std::shared_ptr<ImageEncoder> MockEncoder::clone() const { return std::make_shared<MockEncoder>(*this); }

// --- image source ------------------------------------------------------------

std::vector<SourceHit> MockImageSource::search(const SearchQuery& query, int top_k) {
    if (delay_ms_ > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms_));
    if (!std::filesystem::is_directory(corpus_))
        throw BackendError("mock-source: corpus not found: " + corpus_.string(), true);
    const auto dir = corpus_ / slugify(query.text);
    std::vector<std::pair<int, std::filesystem::path>> files;
    if (std::filesystem::is_directory(dir)) {
        for (const auto& entry : std::filesystem::directory_iterator(dir)) {
            if (entry.path().extension() != ".png") continue;
            const auto stem = entry.path().stem().string();
            if (stem.empty() || !std::all_of(stem.begin(), stem.end(), [](unsigned char c) { return std::isdigit(c); }))
                continue;
            files.emplace_back(std::stoi(stem), entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    std::vector<SourceHit> hits;
    for (const auto& [rank, path] : files) {
        if (static_cast<int>(hits.size()) >= top_k) break;
        SourceHit hit;
        hit.rank = rank;
        hit.origin = path.string();
        try {
            hit.image = read_png(path);
        } catch (const std::exception& e) {
            hit.error = e.what();
        }
        hits.push_back(std::move(hit));
    }
    return hits;
}

}  // namespace appeal::mock
