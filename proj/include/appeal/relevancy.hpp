// Copyright 2026 The appeal authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "appeal/acquisition.hpp"
#include "appeal/backends.hpp"
#include "appeal/image.hpp"
#include "appeal/lexicon.hpp"

namespace appeal {

/// Noun phrases of a caption and the subset touching the domain's lexnames.
struct PhraseSet {
    std::vector<std::string> all_phrases;
    std::vector<std::string> domain_phrases;
};

enum class Aggregate {
    max,       ///< pixelwise maximum of per-phrase maps
    sum_norm,  ///< pixelwise sum divided by its maximum
};

Aggregate aggregate_from_string(std::string_view s);
std::string_view to_string(Aggregate a) noexcept;

/// Lowercased word tokens.
std::vector<std::string> tokenize(std::string_view text);

/// Rule-based chunker: DT? (JJ|NN|CD)* NN, with parts of speech taken from the
/// lexicon (nouns preferred) and a closed list of function words.
std::vector<std::string> noun_phrases(std::string_view caption, const Lexicon& lexicon);

/// Last noun of a phrase ("a small apple" -> "apple").
std::string head_noun(std::string_view phrase, const Lexicon& lexicon);

/// Asks the backend for a caption. An empty string is returned as-is and
/// fails the lexical screen downstream.
std::string caption_image(const Image& image, std::string_view image_id, Captioner& captioner);

/// A phrase is domain-relevant when one of its content words (or an adjacent
/// two-word compound) has, in any sense, a lexname listed in `lexnames`.
PhraseSet extract_domain_phrases(std::string_view caption, std::span<const std::string> lexnames,
                                 const Lexicon& lexicon);

/// Segments each domain phrase, clamps each map into [0,1] and aggregates.
/// No phrases gives an all-zero map.
ScalarField build_relevancy_map(const Image& image, const PhraseSet& phrases, Segmenter& segmenter,
                                Aggregate aggregate = Aggregate::max);

/// Stores relevancy_fraction and keeps the record iff sum(map) >= gamma*w*h.
/// A map whose shape differs from the record is a pipeline bug (std::logic_error).
bool area_filter(ImageRecord& record, const ScalarField& map, double gamma);

/// Equalizes kept positive/negative counts by marking the larger side's
/// highest-rank records (ties: larger id first) as dropped_balance.
std::vector<ImageRecord> balance_polarity(std::vector<ImageRecord> records);

struct FilterOutcome {
    PhraseSet phrases;
    ScalarField map;  ///< empty when the caption screen rejected the image
};

/// Caption screen followed by the area test; updates caption, fraction and status.
FilterOutcome relevancy_filter(ImageRecord& record, const Image& image, Captioner& captioner,
                               Segmenter& segmenter, const Lexicon& lexicon,
                               std::span<const std::string> lexnames, double gamma,
                               Aggregate aggregate = Aggregate::max);

}  // namespace appeal
