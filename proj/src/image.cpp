// Copyright 2026 The appeal authors
// SPDX-License-Identifier: Apache-2.0

#include "appeal/image.hpp"

#include <png.h>
#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <memory>
#include <stdexcept>

namespace appeal {

Image::Image(int width, int height, Rgb fill)
    : width_(width), height_(height),
      data_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3) {
    if (width < 0 || height < 0) throw std::invalid_argument("negative image size");
    for (std::size_t i = 0; i < data_.size(); i += 3) {
        data_[i] = fill.r;
        data_[i + 1] = fill.g;
        data_[i + 2] = fill.b;
    }
}

ScalarField::ScalarField(int width, int height, double fill)
    : width_(width), height_(height),
      values_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {
    if (width < 0 || height < 0) throw std::invalid_argument("negative field size");
}

double ScalarField::min() const {
    return values_.empty() ? 0.0 : *std::min_element(values_.begin(), values_.end());
}

double ScalarField::max() const {
    return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end());
}

void ScalarField::clamp01() {
    for (double& v : values_) v = std::isnan(v) ? 0.0 : std::clamp(v, 0.0, 1.0);
}

ScalarField binarize(const ScalarField& field, double threshold) {
    ScalarField out(field.width(), field.height());
    auto src = field.values();
    auto dst = out.values();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] >= threshold ? 1.0 : 0.0;
    return out;
}

ScalarField invert(const ScalarField& field) {
    ScalarField out(field.width(), field.height());
    auto src = field.values();
    auto dst = out.values();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = 1.0 - src[i];
    return out;
}

// --- PNG ---------------------------------------------------------------------

namespace {

struct PngImage {
    png_image img{};
    PngImage() {
        img.version = PNG_IMAGE_VERSION;
    }
    ~PngImage() { png_image_free(&img); }
    PngImage(const PngImage&) = delete;
    PngImage& operator=(const PngImage&) = delete;
};

void check(int ok, const PngImage& p, const std::string& what) {
    if (!ok) throw std::runtime_error(what + ": " + p.img.message);
}

Image finish_rgb(PngImage& p) {
    p.img.format = PNG_FORMAT_RGB;
    Image out(static_cast<int>(p.img.width), static_cast<int>(p.img.height));
    check(png_image_finish_read(&p.img, nullptr, out.bytes().data(), 0, nullptr), p,
          "png decode");
    return out;
}

ScalarField finish_gray(PngImage& p) {
    p.img.format = PNG_FORMAT_GRAY;
    const int w = static_cast<int>(p.img.width);
    const int h = static_cast<int>(p.img.height);
    std::vector<std::uint8_t> buf(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
    check(png_image_finish_read(&p.img, nullptr, buf.data(), 0, nullptr), p, "png decode");
    ScalarField out(w, h);
    auto dst = out.values();
    for (std::size_t i = 0; i < buf.size(); ++i) dst[i] = buf[i] / 255.0;
    return out;
}

std::vector<std::uint8_t> gray_bytes(const ScalarField& field) {
    std::vector<std::uint8_t> buf(field.size());
    auto src = field.values();
    for (std::size_t i = 0; i < buf.size(); ++i) {
        double v = std::isnan(src[i]) ? 0.0 : std::clamp(src[i], 0.0, 1.0);
        buf[i] = static_cast<std::uint8_t>(std::lround(255.0 * v));
    }
    return buf;
}

std::vector<std::uint8_t> write_memory(PngImage& p, const void* pixels) {
    png_alloc_size_t size = 0;
    check(png_image_write_to_memory(&p.img, nullptr, &size, 0, pixels, 0, nullptr), p,
          "png encode");
    std::vector<std::uint8_t> out(size);
    check(png_image_write_to_memory(&p.img, out.data(), &size, 0, pixels, 0, nullptr), p,
          "png encode");
    out.resize(size);
    return out;
}

}  // namespace

Image read_png(const std::filesystem::path& path) {
    PngImage p;
    check(png_image_begin_read_from_file(&p.img, path.c_str()), p, "png read " + path.string());
    return finish_rgb(p);
}

Image decode_png(std::span<const std::uint8_t> bytes) {
    PngImage p;
    check(png_image_begin_read_from_memory(&p.img, bytes.data(), bytes.size()), p, "png decode");
    return finish_rgb(p);
}

void write_png(const std::filesystem::path& path, const Image& image) {
    PngImage p;
    p.img.width = static_cast<png_uint_32>(image.width());
    p.img.height = static_cast<png_uint_32>(image.height());
    p.img.format = PNG_FORMAT_RGB;
    check(png_image_write_to_file(&p.img, path.c_str(), 0, image.bytes().data(), 0, nullptr), p,
          "png write " + path.string());
}

std::vector<std::uint8_t> encode_png(const Image& image) {
    PngImage p;
    p.img.width = static_cast<png_uint_32>(image.width());
    p.img.height = static_cast<png_uint_32>(image.height());
    p.img.format = PNG_FORMAT_RGB;
    return write_memory(p, image.bytes().data());
}

void write_png_gray(const std::filesystem::path& path, const ScalarField& field) {
    auto buf = gray_bytes(field);
    PngImage p;
    p.img.width = static_cast<png_uint_32>(field.width());
    p.img.height = static_cast<png_uint_32>(field.height());
    p.img.format = PNG_FORMAT_GRAY;
    check(png_image_write_to_file(&p.img, path.c_str(), 0, buf.data(), 0, nullptr), p,
          "png write " + path.string());
}

std::vector<std::uint8_t> encode_png_gray(const ScalarField& field) {
    auto buf = gray_bytes(field);
    PngImage p;
    p.img.width = static_cast<png_uint_32>(field.width());
    p.img.height = static_cast<png_uint_32>(field.height());
    p.img.format = PNG_FORMAT_GRAY;
    return write_memory(p, buf.data());
}

ScalarField read_png_gray(const std::filesystem::path& path) {
    PngImage p;
    check(png_image_begin_read_from_file(&p.img, path.c_str()), p, "png read " + path.string());
    return finish_gray(p);
}

ScalarField decode_png_gray(std::span<const std::uint8_t> bytes) {
    PngImage p;
    check(png_image_begin_read_from_memory(&p.img, bytes.data(), bytes.size()), p, "png decode");
    return finish_gray(p);
}

// --- hashing -----------------------------------------------------------------

namespace {

std::string hex_prefix(const unsigned char* digest, std::size_t n) {
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(n * 2);
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(kHex[digest[i] >> 4]);
        out.push_back(kHex[digest[i] & 0xf]);
    }
    return out;
}

}  // namespace

std::string content_hash(const Image& image) {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                                  &EVP_MD_CTX_free);
    const std::array<std::uint32_t, 2> dims{static_cast<std::uint32_t>(image.width()),
                                            static_cast<std::uint32_t>(image.height())};
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!ctx || !EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) ||
        !EVP_DigestUpdate(ctx.get(), dims.data(), sizeof(dims)) ||
        !EVP_DigestUpdate(ctx.get(), image.bytes().data(), image.bytes().size()) ||
        !EVP_DigestFinal_ex(ctx.get(), digest, &len))
        throw std::runtime_error("sha256 failed");
    return hex_prefix(digest, 16);
}

std::string key_hash(std::string_view key) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!EVP_Digest(key.data(), key.size(), digest, &len, EVP_sha256(), nullptr))
        throw std::runtime_error("sha256 failed");
    return hex_prefix(digest, 16);
}

// --- resampling --------------------------------------------------------------

namespace {

double cubic(double x) {
    constexpr double a = -0.5;
    x = std::abs(x);
    if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
    if (x < 2.0) return (((x - 5.0) * x + 8.0) * x - 4.0) * a;
    return 0.0;
}

std::uint8_t to_u8(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

}  // namespace

Image resize_bicubic(const Image& src, int width, int height) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("resize to empty size");
    if (src.width() == width && src.height() == height) return src;
    Image out(width, height);
    const double sx = static_cast<double>(src.width()) / width;
    const double sy = static_cast<double>(src.height()) / height;
    for (int y = 0; y < height; ++y) {
        const double fy = (y + 0.5) * sy - 0.5;
        const int iy = static_cast<int>(std::floor(fy));
        for (int x = 0; x < width; ++x) {
            const double fx = (x + 0.5) * sx - 0.5;
            const int ix = static_cast<int>(std::floor(fx));
            double acc[3] = {0, 0, 0};
            double wsum = 0.0;
            for (int m = -1; m <= 2; ++m) {
                const double wy = cubic(fy - (iy + m));
                const int yy = std::clamp(iy + m, 0, src.height() - 1);
                for (int n = -1; n <= 2; ++n) {
                    const double w = wy * cubic(fx - (ix + n));
                    const Rgb c = src.pixel(std::clamp(ix + n, 0, src.width() - 1), yy);
                    acc[0] += w * c.r;
                    acc[1] += w * c.g;
                    acc[2] += w * c.b;
                    wsum += w;
                }
            }
            out.set(x, y, {to_u8(acc[0] / wsum), to_u8(acc[1] / wsum), to_u8(acc[2] / wsum)});
        }
    }
    return out;
}

Image resize_area(const Image& src, int width, int height) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("resize to empty size");
    if (width > src.width() || height > src.height()) return resize_bicubic(src, width, height);
    if (src.width() == width && src.height() == height) return src;
    Image out(width, height);
    const double sx = static_cast<double>(src.width()) / width;
    const double sy = static_cast<double>(src.height()) / height;
    for (int y = 0; y < height; ++y) {
        const double y0 = y * sy, y1 = (y + 1) * sy;
        for (int x = 0; x < width; ++x) {
            const double x0 = x * sx, x1 = (x + 1) * sx;
            double acc[3] = {0, 0, 0};
            double area = 0.0;
            for (int yy = static_cast<int>(y0); yy < std::min<double>(y1, src.height()); ++yy) {
                const double hy = std::min<double>(yy + 1, y1) - std::max<double>(yy, y0);
                for (int xx = static_cast<int>(x0); xx < std::min<double>(x1, src.width());
                     ++xx) {
                    const double w = hy * (std::min<double>(xx + 1, x1) - std::max<double>(xx, x0));
                    const Rgb c = src.pixel(xx, yy);
                    acc[0] += w * c.r;
                    acc[1] += w * c.g;
                    acc[2] += w * c.b;
                    area += w;
                }
            }
            out.set(x, y, {to_u8(acc[0] / area), to_u8(acc[1] / area), to_u8(acc[2] / area)});
        }
    }
    return out;
}

ScalarField resize_bilinear(const ScalarField& src, int width, int height) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("resize to empty size");
    if (src.width() == width && src.height() == height) return src;
    ScalarField out(width, height);
    const double sx = static_cast<double>(src.width()) / width;
    const double sy = static_cast<double>(src.height()) / height;
    for (int y = 0; y < height; ++y) {
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, src.height() - 1.0);
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, src.height() - 1);
        const double ty = fy - y0;
        for (int x = 0; x < width; ++x) {
            const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, src.width() - 1.0);
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, src.width() - 1);
            const double tx = fx - x0;
            const double top = src.at(x0, y0) * (1 - tx) + src.at(x1, y0) * tx;
            const double bot = src.at(x0, y1) * (1 - tx) + src.at(x1, y1) * tx;
            out.at(x, y) = top * (1 - ty) + bot * ty;
        }
    }
    return out;
}

Image crop(const Image& src, int x0, int y0, int width, int height) {
    if (x0 < 0 || y0 < 0 || x0 + width > src.width() || y0 + height > src.height())
        throw std::out_of_range("crop outside image");
    Image out(width, height);
    for (int y = 0; y < height; ++y) {
        std::memcpy(&out.bytes()[static_cast<std::size_t>(y) * width * 3],
                    &src.bytes()[(static_cast<std::size_t>(y0 + y) * src.width() + x0) * 3],
                    static_cast<std::size_t>(width) * 3);
    }
    return out;
}

// --- colour ------------------------------------------------------------------

double luminance(Rgb c) noexcept {
    return (0.299 * c.r + 0.587 * c.g + 0.114 * c.b) / 255.0;
}

Hsv to_hsv(Rgb c) noexcept {
    const double r = c.r / 255.0, g = c.g / 255.0, b = c.b / 255.0;
    const double mx = std::max({r, g, b});
    const double mn = std::min({r, g, b});
    const double d = mx - mn;
    Hsv out;
    out.v = mx;
    out.s = mx > 0.0 ? d / mx : 0.0;
    if (d > 0.0) {
        double h;
        if (mx == r)
            h = std::fmod((g - b) / d, 6.0);
        else if (mx == g)
            h = (b - r) / d + 2.0;
        else
            h = (r - g) / d + 4.0;
        h *= 60.0;
        out.h = h < 0.0 ? h + 360.0 : h;
    }
    return out;
}

Rgb from_hsv(const Hsv& hsv) noexcept {
    const double c = hsv.v * hsv.s;
    const double hp = std::fmod(hsv.h, 360.0) / 60.0;
    const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
    double r = 0, g = 0, b = 0;
    if (hp < 1) { r = c; g = x; }
    else if (hp < 2) { r = x; g = c; }
    else if (hp < 3) { g = c; b = x; }
    else if (hp < 4) { g = x; b = c; }
    else if (hp < 5) { r = x; b = c; }
    else { r = c; b = x; }
    const double m = hsv.v - c;
    return {to_u8((r + m) * 255.0), to_u8((g + m) * 255.0), to_u8((b + m) * 255.0)};
}

}  // namespace appeal
