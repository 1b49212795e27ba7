// Copyright 2026 The appeal authors
// SPDX-License-Identifier: Apache-2.0

#include "appeal/kernels.hpp"

#include <algorithm>
#include <stdexcept>

namespace appeal::kernels {

namespace {

// Inclusive index range [first, last) of grid positions whose window covers coordinate p.
std::pair<std::size_t, std::size_t> covering(const std::vector<int>& pos, int window, int p) {
    std::size_t first = 0;
    while (first < pos.size() && pos[first] + window <= p) ++first;
    std::size_t last = first;
    while (last < pos.size() && pos[last] <= p) ++last;
    return {first, last};
}

void check_sizes(const WindowGrid& grid, std::span<const double> scores, int width, int height,
                 std::span<double> sums, std::span<int> counts) {
    const auto n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    if (scores.size() != grid.xs.size() * grid.ys.size())
        throw std::invalid_argument("score grid does not match window positions");
    if (sums.size() != n || counts.size() != n)
        throw std::invalid_argument("accumulator size does not match image");
}

// Accumulates one image row. Windows are visited in (iy, ix) order for every
// pixel, so serial and parallel variants sum in the same order.
void accumulate_row(const WindowGrid& grid, std::span<const double> scores, int width, int y,
                    std::span<double> sums, std::span<int> counts) {
    const auto [y0, y1] = covering(grid.ys, grid.window, y);
    const std::size_t row = static_cast<std::size_t>(y) * static_cast<std::size_t>(width);
    for (int x = 0; x < width; ++x) {
        const auto [x0, x1] = covering(grid.xs, grid.window, x);
        double s = 0.0;
        int c = 0;
        for (std::size_t iy = y0; iy < y1; ++iy)
            for (std::size_t ix = x0; ix < x1; ++ix) {
                s += scores[iy * grid.xs.size() + ix];
                ++c;
            }
        sums[row + x] = s;
        counts[row + x] = c;
    }
}

void downsample_cell_row(const Image& image, int grid, int gy, std::span<double> out) {
    const double sx = static_cast<double>(image.width()) / grid;
    const double sy = static_cast<double>(image.height()) / grid;
    const int y0 = static_cast<int>(gy * sy);
    const int y1 = std::max(y0 + 1, static_cast<int>((gy + 1) * sy));
    for (int gx = 0; gx < grid; ++gx) {
        const int x0 = static_cast<int>(gx * sx);
        const int x1 = std::max(x0 + 1, static_cast<int>((gx + 1) * sx));
        double acc[3] = {0, 0, 0};
        int n = 0;
        for (int y = y0; y < std::min(y1, image.height()); ++y)
            for (int x = x0; x < std::min(x1, image.width()); ++x) {
                const Rgb c = image.pixel(x, y);
                acc[0] += c.r;
                acc[1] += c.g;
                acc[2] += c.b;
                ++n;
            }
        const std::size_t o = (static_cast<std::size_t>(gy) * grid + gx) * 3;
        for (int k = 0; k < 3; ++k) out[o + k] = acc[k] / (255.0 * std::max(n, 1)) - 0.5;
    }
}

double row_sum(std::span<const double> values, int width, int y) {
    double s = 0.0;
    const std::size_t row = static_cast<std::size_t>(y) * static_cast<std::size_t>(width);
    for (int x = 0; x < width; ++x) s += values[row + x];
    return s;
}

}  // namespace

namespace serial {

void max_into(std::span<double> acc, std::span<const double> src) {
    if (acc.size() != src.size()) throw std::invalid_argument("max_into: size mismatch");
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] = std::max(acc[i], src[i]);
}

void add_into(std::span<double> acc, std::span<const double> src) {
    if (acc.size() != src.size()) throw std::invalid_argument("add_into: size mismatch");
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += src[i];
}

double field_sum(std::span<const double> values, int width, int height) {
    double total = 0.0;
    for (int y = 0; y < height; ++y) total += row_sum(values, width, y);
    return total;
}

void accumulate_windows(const WindowGrid& grid, std::span<const double> scores, int width,
                        int height, std::span<double> sums, std::span<int> counts) {
    check_sizes(grid, scores, width, height, sums, counts);
    for (int y = 0; y < height; ++y) accumulate_row(grid, scores, width, y, sums, counts);
}

void downsample_rgb(const Image& image, int grid, std::span<double> out) {
    if (out.size() != static_cast<std::size_t>(grid) * grid * 3)
        throw std::invalid_argument("downsample_rgb: output size");
    for (int gy = 0; gy < grid; ++gy) downsample_cell_row(image, grid, gy, out);
}

}  // namespace serial

namespace omp {

void max_into(std::span<double> acc, std::span<const double> src) {
    if (acc.size() != src.size()) throw std::invalid_argument("max_into: size mismatch");
    const auto n = static_cast<std::ptrdiff_t>(acc.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) acc[i] = std::max(acc[i], src[i]);
}

void add_into(std::span<double> acc, std::span<const double> src) {
    if (acc.size() != src.size()) throw std::invalid_argument("add_into: size mismatch");
    const auto n = static_cast<std::ptrdiff_t>(acc.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) acc[i] += src[i];
}

double field_sum(std::span<const double> values, int width, int height) {
    std::vector<double> rows(static_cast<std::size_t>(height));
#pragma omp parallel for schedule(static)
    for (int y = 0; y < height; ++y) rows[y] = row_sum(values, width, y);
    double total = 0.0;
    for (double r : rows) total += r;
    return total;
}

void accumulate_windows(const WindowGrid& grid, std::span<const double> scores, int width,
                        int height, std::span<double> sums, std::span<int> counts) {
    check_sizes(grid, scores, width, height, sums, counts);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < height; ++y) accumulate_row(grid, scores, width, y, sums, counts);
}

void downsample_rgb(const Image& image, int grid, std::span<double> out) {
    if (out.size() != static_cast<std::size_t>(grid) * grid * 3)
        throw std::invalid_argument("downsample_rgb: output size");
#pragma omp parallel for schedule(static)
    for (int gy = 0; gy < grid; ++gy) downsample_cell_row(image, grid, gy, out);
}

}  // namespace omp

}  // namespace appeal::kernels
