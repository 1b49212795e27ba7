// Copyright 2026 The appeal authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace appeal {

/// WordNet lexicographer file name for a lexfile number ("noun.food" for 13).
std::string_view lexname(int lexfile);
/// Inverse of lexname(); -1 for unknown names.
int lexfile_from_name(std::string_view name);

/// Lemma -> part-of-speech and lexicographer-file lookup backed by WordNet.
class Lexicon {
public:
    enum Pos : std::uint8_t { noun = 1, verb = 2, adj = 4, adv = 8 };

    struct Entry {
        std::uint8_t pos = 0;
        std::vector<int> lexfiles;  ///< sorted, unique; all senses
    };

    /// Reads either a WordNet dict directory (index.sense) or the compact TSV
    /// written by write_compact().
    static Lexicon load(const std::filesystem::path& path);
    /// Default shipped lexicon (data/wordnet/lexicon.tsv).
    static const Lexicon& shared();

    void add(std::string lemma, Pos pos, int lexfile);

    /// Exact lemma lookup (multiword lemmas use '_').
    const Entry* find(std::string_view lemma) const;

    /// Union of POS flags over the word and its morphological base forms.
    std::uint8_t pos_of(std::string_view word) const;
    /// Lexnames over every sense of the word and its base forms.
    std::vector<std::string> lexnames_of(std::string_view word) const;

    /// Base forms present in the lexicon (WordNet morphy detachment rules, no exception lists).
    std::vector<std::string> base_forms(std::string_view word) const;

    std::size_t size() const noexcept { return entries_.size(); }
    void write_compact(const std::filesystem::path& path) const;

private:
    void read_index_sense(const std::filesystem::path& file);
    void read_compact(const std::filesystem::path& file);

    std::unordered_map<std::string, Entry> entries_;
};

}  // namespace appeal
