// Copyright 2026 The appeal authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "appeal/models.hpp"

namespace appeal {

struct MetricReport {
    double plcc = 0.0;
    double srcc = 0.0;
    double krcc = 0.0;
    double rmse = 0.0;
    double mae = 0.0;
    std::size_t n = 0;
};

json to_json(const MetricReport& m);

/// Pearson, Spearman (average ranks), Kendall tau-b, RMSE and MAE.
/// Zero variance in either input throws std::domain_error.
MetricReport correlations(std::span<const double> x, std::span<const double> y);

/// 1-based ranks; tied values share their average rank.
std::vector<double> average_ranks(std::span<const double> v);
double pearson(std::span<const double> x, std::span<const double> y);
double spearman(std::span<const double> x, std::span<const double> y);
/// O(n log n) tau-b (Knight's merge-sort algorithm).
double kendall_tau_b(std::span<const double> x, std::span<const double> y);

/// Plain-text table: one header row and one value row.
std::string format_metric_table(const MetricReport& m, std::string_view row_label);

struct ToyHarnessConfig {
    std::uint64_t seed = 7;
    int images = 500;        ///< labeled toy images with known alpha
    int bases = 100;         ///< synthesis bases drawn from them
    int image_size = 64;
    SynthesisPlan plan{3, 6};
    int pairs_per_base = 25;
    int exemplars = 100;
    int embedding_exemplars = 50;
    double gamma = 0.04;
    TrainConfig training{};
    /// Overrides every stage's epoch count (0 = untrained negative control).
    std::optional<int> epochs;
    /// Manifests, images and report are written here when set.
    std::optional<std::filesystem::path> out_dir;
};

struct ToyHarnessResult {
    MetricReport metrics;
    TrainReport training;
    std::size_t synthetic_samples = 0;
    std::size_t pairs = 0;
    std::size_t kept = 0;
    std::vector<double> alpha_truth;
    std::vector<double> labels;
    json report;
};

/// Toy domain whose appeal is the saturation of a keyed disk. Runs filtering,
/// embedding inversion, synthesis, pairing, comparator training, voting and
/// scaling on mock backends, then correlates labels with the true alpha.
/// Stage failures surface as StageError naming the stage.
ToyHarnessResult toy_harness(const ToyHarnessConfig& cfg);

}  // namespace appeal
