// Copyright 2026 The appeal authors
// SPDX-License-Identifier: Apache-2.0

// Data-parallel inner loops. Every kernel has a serial reference and an OpenMP
// variant; both produce bit-identical results (per-pixel/per-row work is
// partitioned, never reordered), which tests/test_kernels.cpp checks and
// bench/kernels_bench.cpp times.

#pragma once

#include <span>
#include <vector>

#include "appeal/image.hpp"

namespace appeal::kernels {

/// Placement of sliding windows over an image. Scores are row-major,
/// `scores[iy * xs.size() + ix]` for the window at (xs[ix], ys[iy]).
struct WindowGrid {
    std::vector<int> xs;
    std::vector<int> ys;
    int window = 0;
};

namespace serial {

/// acc[i] = max(acc[i], src[i])
void max_into(std::span<double> acc, std::span<const double> src);
/// acc[i] += src[i]
void add_into(std::span<double> acc, std::span<const double> src);
/// Row-major field sum: per-row partial sums, then rows in order.
double field_sum(std::span<const double> values, int width, int height);
/// Per-pixel sum of covering window scores and covering-window counts.
void accumulate_windows(const WindowGrid& grid, std::span<const double> scores, int width,
                        int height, std::span<double> sums, std::span<int> counts);
/// Box-averages an image onto a grid x grid lattice; out is [r,g,b] per cell,
/// row-major, scaled to [-0.5, 0.5].
void downsample_rgb(const Image& image, int grid, std::span<double> out);

}  // namespace serial

namespace omp {

void max_into(std::span<double> acc, std::span<const double> src);
void add_into(std::span<double> acc, std::span<const double> src);
double field_sum(std::span<const double> values, int width, int height);
void accumulate_windows(const WindowGrid& grid, std::span<const double> scores, int width,
                        int height, std::span<double> sums, std::span<int> counts);
void downsample_rgb(const Image& image, int grid, std::span<double> out);

}  // namespace omp

}  // namespace appeal::kernels
