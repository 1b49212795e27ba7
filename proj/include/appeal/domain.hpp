// Copyright 2026 The appeal authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "appeal/util.hpp"

namespace appeal {

enum class Polarity { positive, negative };

std::string_view to_string(Polarity p) noexcept;
Polarity polarity_from_string(std::string_view s);

/// Named subgroup of unappealing adjectives; each group gets its own negative embedding.
struct NegativeGroup {
    std::string name;
    std::vector<std::string> adjectives;

    friend bool operator==(const NegativeGroup&, const NegativeGroup&) = default;
};

struct SynthesisPlan {
    int backgrounds_per_base = 0;
    int alphas_per_background = 0;

    friend bool operator==(const SynthesisPlan&, const SynthesisPlan&) = default;
};

/// One application domain end to end: word lists, lexical categories and thresholds.
struct DomainConfig {
    std::string name;
    std::vector<std::string> nouns;
    std::vector<std::string> positive_adjectives;
    std::vector<NegativeGroup> negative_groups;
    std::vector<std::string> lexnames;
    double gamma = 0.0;
    int output_size = 0;
    SynthesisPlan synthesis_plan;

    /// Throws ValidationError naming the first violated field.
    void validate() const;

    friend bool operator==(const DomainConfig&, const DomainConfig&) = default;
};

struct SearchQuery {
    std::string text;
    Polarity polarity = Polarity::positive;
    std::optional<std::string> negative_group;

    friend bool operator==(const SearchQuery&, const SearchQuery&) = default;
};

json to_json(const SearchQuery& q);
SearchQuery query_from_json(const json& j);

/// Parses a TOML domain file. Syntax errors raise ConfigError with line info;
/// unknown keys are rejected; invariant violations raise ValidationError.
DomainConfig load_domain_config(const std::filesystem::path& path);
DomainConfig parse_domain_config(std::string_view text, std::string_view source = "<string>");

/// Full adjective x noun cross product, adjective-major. Positive adjectives come
/// first, then each negative group in configuration order.
std::vector<SearchQuery> generate_queries(const DomainConfig& cfg);

}  // namespace appeal
