// Copyright 2026 The appeal authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace appeal {

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;

    friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// 8-bit interleaved RGB image.
class Image {
public:
    Image() = default;
    Image(int width, int height, Rgb fill = {});

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    bool empty() const noexcept { return width_ == 0 || height_ == 0; }

    Rgb pixel(int x, int y) const noexcept {
        const std::uint8_t* p = &data_[index(x, y)];
        return {p[0], p[1], p[2]};
    }
    void set(int x, int y, Rgb c) noexcept {
        std::uint8_t* p = &data_[index(x, y)];
        p[0] = c.r;
        p[1] = c.g;
        p[2] = c.b;
    }

    std::span<const std::uint8_t> bytes() const noexcept { return data_; }
    std::span<std::uint8_t> bytes() noexcept { return data_; }

    friend bool operator==(const Image&, const Image&) = default;

private:
    std::size_t index(int x, int y) const noexcept {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                static_cast<std::size_t>(x)) * 3;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> data_;
};

/// Per-pixel scalar map. Relevancy maps and appeal heatmaps keep values in [0,1].
class ScalarField {
public:
    ScalarField() = default;
    ScalarField(int width, int height, double fill = 0.0);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return values_.size(); }

    double at(int x, int y) const noexcept { return values_[offset(x, y)]; }
    double& at(int x, int y) noexcept { return values_[offset(x, y)]; }

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

    bool same_shape(const Image& img) const noexcept {
        return width_ == img.width() && height_ == img.height();
    }
    bool same_shape(const ScalarField& f) const noexcept {
        return width_ == f.width_ && height_ == f.height_;
    }

    double min() const;
    double max() const;
    /// Clamps every value into [0,1]; NaN becomes 0.
    void clamp01();

    friend bool operator==(const ScalarField&, const ScalarField&) = default;

private:
    std::size_t offset(int x, int y) const noexcept {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<double> values_;
};

/// v >= threshold -> 1, else 0.
ScalarField binarize(const ScalarField& field, double threshold);
/// 1 - v per pixel.
ScalarField invert(const ScalarField& field);

Image read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image& image);
/// Encodes to an in-memory PNG byte stream.
std::vector<std::uint8_t> encode_png(const Image& image);
Image decode_png(std::span<const std::uint8_t> bytes);

/// Single-channel 8-bit PNG, value = round(255 * clamp(v, 0, 1)).
void write_png_gray(const std::filesystem::path& path, const ScalarField& field);
std::vector<std::uint8_t> encode_png_gray(const ScalarField& field);
ScalarField read_png_gray(const std::filesystem::path& path);
ScalarField decode_png_gray(std::span<const std::uint8_t> bytes);

/// Hex SHA-256 prefix (32 chars) over the dimensions and decoded RGB bytes.
std::string content_hash(const Image& image);
/// Hex SHA-256 prefix (32 chars) over an arbitrary string key.
std::string key_hash(std::string_view key);

/// Keys's bicubic (a = -0.5) resampling.
Image resize_bicubic(const Image& src, int width, int height);
/// Box-filtered downscale; falls back to bicubic when enlarging.
Image resize_area(const Image& src, int width, int height);
ScalarField resize_bilinear(const ScalarField& src, int width, int height);

Image crop(const Image& src, int x0, int y0, int width, int height);

/// Rec. 601 luma in [0,1].
double luminance(Rgb c) noexcept;

struct Hsv {
    double h = 0.0;  ///< degrees in [0,360)
    double s = 0.0;
    double v = 0.0;
};
Hsv to_hsv(Rgb c) noexcept;
Rgb from_hsv(const Hsv& hsv) noexcept;

}  // namespace appeal
