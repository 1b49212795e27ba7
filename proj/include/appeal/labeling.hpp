// Copyright 2026 The appeal authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "appeal/acquisition.hpp"
#include "appeal/models.hpp"

namespace appeal {

struct ExemplarSet {
    std::vector<std::string> ids;
    std::uint64_t selection_seed = 0;
    std::string strategy = "stratified";
};

json to_json(const ExemplarSet& e);
ExemplarSet exemplars_from_json(const json& j);

inline constexpr int kDefaultExemplarCount = 100;

/// Stratified sample of kept records: ceil(n/2) positive-query and floor(n/2)
/// negative-query ids. A short side is topped up from the other.
ExemplarSet select_exemplars(std::span<const ImageRecord> records, int n, std::uint64_t seed);

struct AppealLabel {
    std::string image_id;
    double raw = 0.0;
    double scaled = 0.0;

    friend bool operator==(const AppealLabel&, const AppealLabel&) = default;
};

json to_json(const AppealLabel& l);
AppealLabel label_from_json(const json& j);

using PairScorer = std::function<double(const Image& image, const Image& exemplar)>;

/// Mean of compare(image, v) over the exemplars.
double vote_score(const Image& image, std::span<const Image> exemplars, const PairScorer& compare);

/// Exemplar features encoded once by the comparator's encoder.
struct ExemplarBank {
    std::vector<std::string> ids;
    Eigen::MatrixXd features;  ///< d x |V|
};

ExemplarBank encode_exemplars(const ComparatorModel& model, const ExemplarSet& set,
                              const std::function<Image(const std::string& id)>& load);

/// Mean comparator output of `image` against every exemplar, one batched pass.
double vote_score(const ComparatorModel& model, const ExemplarBank& bank, const Image& image);
double vote_score_features(const ComparatorModel& model, const ExemplarBank& bank, const Eigen::VectorXd& f);

/// 1 + 9 (raw - min) / (max - min); all-equal raws map to 5.5.
std::vector<AppealLabel> scale_scores(std::span<const std::pair<std::string, double>> raws);

struct AnnotateOptions {
    /// Raw scores already computed ({image_id, raw} JSONL); appended to as work progresses.
    std::optional<std::filesystem::path> raw_cache;
    int retries = 2;
    double max_failure_rate = 0.01;
};

struct AnnotateResult {
    std::vector<AppealLabel> labels;
    std::vector<std::pair<std::string, std::string>> failures;  ///< (image_id, message)
};

/// Votes every record, then rescales over the whole set. Throws StageError
/// when more than max_failure_rate of the images fail.
AnnotateResult annotate_dataset(std::span<const ImageRecord> records, const ExemplarBank& bank,
                                const ComparatorModel& model,
                                const std::function<Image(const ImageRecord&)>& load,
                                const AnnotateOptions& opts = {});

}  // namespace appeal
