// Copyright 2026 The appeal authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "appeal/appealmap.hpp"
#include "appeal/backends.hpp"
#include "appeal/domain.hpp"
#include "appeal/models.hpp"
#include "appeal/relevancy.hpp"
#include "appeal/synthesis.hpp"

namespace appeal {

struct FetchSettings {
    int top_k = 100;
};

struct SynthesisSettings {
    int bases = 1000;
    int embedding_exemplars = 50;
    InversionParams inversion{};
    InpaintOptions inpaint{};
};

struct LabelingSettings {
    int exemplars = 100;
    double max_failure_rate = 0.01;
};

/// Everything a stage command needs. Relative paths resolve against the
/// directory of the run-config file.
struct RunConfig {
    std::filesystem::path config_path;
    std::filesystem::path domain_path;
    DomainConfig domain;
    std::filesystem::path workdir;
    std::uint64_t seed = 0;
    std::map<Role, BackendSpec> backends;
    FetchSettings fetch;
    Aggregate aggregate = Aggregate::max;
    SynthesisSettings synthesis;
    int pairs_per_base = 25;
    TrainConfig training;
    std::vector<int> comparator_hidden = kComparatorHidden;
    std::vector<int> estimator_hidden = kEstimatorHidden;
    LabelingSettings labeling;
    HeatmapConfig heatmap;
    EnhanceConfig enhance;
};

/// Unknown keys and type errors raise ConfigError with line/column; invariant
/// violations raise ValidationError naming the field.
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig parse_run_config(std::string_view text, const std::filesystem::path& path);

/// Stage seed derived from the run seed, e.g. stage_seed(cfg, "synth").
std::uint64_t stage_seed(const RunConfig& cfg, std::string_view stage);

}  // namespace appeal
