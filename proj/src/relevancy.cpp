// Copyright 2026 The appeal authors
// SPDX-License-Identifier: Apache-2.0

#include "appeal/relevancy.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <stdexcept>

#include "appeal/error.hpp"
#include "appeal/kernels.hpp"

namespace appeal {

Aggregate aggregate_from_string(std::string_view s) {
    if (s == "max") return Aggregate::max;
    if (s == "sum_norm") return Aggregate::sum_norm;
    throw ValidationError("aggregate", "expected max|sum_norm, got '" + std::string(s) + "'");
}

std::string_view to_string(Aggregate a) noexcept { return a == Aggregate::max ? "max" : "sum_norm"; }

namespace {

enum class Tag { det, adj, noun, num, other };

const std::set<std::string, std::less<>>& determiners() {
    static const std::set<std::string, std::less<>> s = {
        "a", "an", "the", "this", "that", "these", "those", "some", "any", "each", "every",
        "its", "his", "her", "their", "my", "your", "our", "several", "many", "few", "no",
        "another", "other", "both", "all", "such", "much", "more", "most"};
    return s;
}

const std::set<std::string, std::less<>>& stop_words() {
    static const std::set<std::string, std::less<>> s = {
        // prepositions
        "with", "on", "in", "of", "over", "at", "by", "for", "from", "into", "onto", "under",
        "near", "next", "to", "beside", "besides", "between", "behind", "above", "below",
        "inside", "outside", "around", "across", "along", "through", "against", "among",
        "atop", "upon", "underneath", "beneath", "within", "without", "like", "up", "down",
        "off", "out", "about", "during", "toward", "towards", "while", "as",
        // conjunctions
        "and", "or", "but", "nor", "yet", "so", "then", "than",
        // pronouns
        "it", "he", "she", "they", "we", "you", "i", "him", "them", "us", "me", "there", "here",
        "who", "which", "what", "where", "when", "someone", "something",
        // auxiliaries and copulas
        "is", "are", "was", "were", "be", "been", "being", "am", "has", "have", "had", "do",
        "does", "did", "can", "could", "will", "would", "should", "may", "might", "must",
        "not", "very", "too", "also", "just"};
    return s;
}

bool is_number(std::string_view w) {
    static const std::set<std::string, std::less<>> words = {
        "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "dozen"};
    return (!w.empty() && std::all_of(w.begin(), w.end(), [](unsigned char c) { return std::isdigit(c); })) ||
           words.count(w) != 0;
}

bool is_participle(std::string_view w, const Lexicon& lex) {
    if (!(w.ends_with("ing") || w.ends_with("ed"))) return false;
    return (lex.pos_of(w) & Lexicon::verb) != 0;
}

Tag tag_word(std::string_view w, const Lexicon& lex) {
    if (determiners().count(w)) return Tag::det;
    if (stop_words().count(w)) return Tag::other;
    if (is_number(w)) return Tag::num;
    const auto pos = lex.pos_of(w);
    if (pos == 0) return Tag::noun;  // unknown words behave like proper nouns
    if (pos & Lexicon::noun) return Tag::noun;
    if (pos & Lexicon::adj) return Tag::adj;
    return Tag::other;
}

// Adjacent tokens that form a lexicon noun ("living room") become one token.
std::vector<std::string> merge_compounds(std::vector<std::string> toks, const Lexicon& lex) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < toks.size(); ++i) {
        if (i + 1 < toks.size() && !determiners().count(toks[i]) && !stop_words().count(toks[i])) {
            const auto* e = lex.find(toks[i] + "_" + toks[i + 1]);
            if (e && (e->pos & Lexicon::noun)) {
                out.push_back(toks[i] + " " + toks[i + 1]);
                ++i;
                continue;
            }
        }
        out.push_back(std::move(toks[i]));
    }
    return out;
}

struct Chunk {
    std::vector<std::string> words;
    std::vector<Tag> tags;
};

std::vector<Chunk> chunk(std::string_view caption, const Lexicon& lex) {
    std::vector<Chunk> out;
    Chunk cur;
    auto flush = [&] {
        while (!cur.tags.empty() && cur.tags.back() != Tag::noun) {
            cur.tags.pop_back();
            cur.words.pop_back();
        }
        if (std::find(cur.tags.begin(), cur.tags.end(), Tag::noun) != cur.tags.end()) out.push_back(cur);
        cur = {};
    };
    for (const auto& w : merge_compounds(tokenize(caption), lex)) {
        Tag t = tag_word(w, lex);
        // A participle right after a noun is a verb ("a man holding", "fries sitting").
        if (t == Tag::noun && !cur.tags.empty() && cur.tags.back() == Tag::noun && is_participle(w, lex))
            t = Tag::other;
        if (t == Tag::other) {
            flush();
            continue;
        }
        if (t == Tag::det) flush();
        cur.words.push_back(w);
        cur.tags.push_back(t);
    }
    flush();
    return out;
}

std::string join(const std::vector<std::string>& words, char sep) {
    std::string s;
    for (const auto& w : words) {
        if (!s.empty()) s += sep;
        s += w;
    }
    return s;
}

bool any_lexname(const std::vector<std::string>& names, std::span<const std::string> wanted) {
    for (const auto& n : names)
        if (std::find(wanted.begin(), wanted.end(), n) != wanted.end()) return true;
    return false;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : text) {
        if (std::isalnum(c) || c == '\'') {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::vector<std::string> noun_phrases(std::string_view caption, const Lexicon& lexicon) {
    std::vector<std::string> out;
    for (const auto& c : chunk(caption, lexicon)) out.push_back(join(c.words, ' '));
    return out;
}

std::string head_noun(std::string_view phrase, const Lexicon& lexicon) {
    for (const auto& c : chunk(phrase, lexicon))
        for (std::size_t i = c.words.size(); i-- > 0;)
            if (c.tags[i] == Tag::noun) return c.words[i];
    auto toks = tokenize(phrase);
    return toks.empty() ? std::string{} : toks.back();
}

std::string caption_image(const Image& image, std::string_view image_id, Captioner& captioner) {
    if (image.empty()) throw ValidationError("image", "undecodable or empty image " + std::string(image_id));
    return trim(captioner.caption(image, image_id));
}

PhraseSet extract_domain_phrases(std::string_view caption, std::span<const std::string> lexnames,
                                 const Lexicon& lexicon) {
    PhraseSet out;
    for (const auto& c : chunk(caption, lexicon)) {
        std::string phrase = join(c.words, ' ');
        bool hit = false;
        for (std::size_t i = 0; i < c.words.size() && !hit; ++i) {
            if (c.tags[i] == Tag::det || c.tags[i] == Tag::num) continue;
            const auto& w = c.words[i];
            const auto space = w.find(' ');
            if (space == std::string::npos) {
                hit = any_lexname(lexicon.lexnames_of(w), lexnames);
                continue;
            }
            // compound first, then its parts
            std::string joined = w;
            joined[space] = '_';
            hit = any_lexname(lexicon.lexnames_of(joined), lexnames) ||
                  any_lexname(lexicon.lexnames_of(w.substr(0, space)), lexnames) ||
                  any_lexname(lexicon.lexnames_of(w.substr(space + 1)), lexnames);
        }
        if (hit) out.domain_phrases.push_back(phrase);
        out.all_phrases.push_back(std::move(phrase));
    }
    return out;
}

ScalarField build_relevancy_map(const Image& image, const PhraseSet& phrases, Segmenter& segmenter,
                                Aggregate aggregate) {
    ScalarField acc(image.width(), image.height(), 0.0);
    for (const auto& phrase : phrases.domain_phrases) {
        ScalarField m = segmenter.segment(image, phrase);
        if (!m.same_shape(image))
            throw BackendError("segmenter " + segmenter.id() + " returned a " + std::to_string(m.width()) +
                                   "x" + std::to_string(m.height()) + " map for a " +
                                   std::to_string(image.width()) + "x" + std::to_string(image.height()) +
                                   " image",
                               false);
        m.clamp01();
        if (aggregate == Aggregate::max)
            kernels::omp::max_into(acc.values(), m.values());
        else
            kernels::omp::add_into(acc.values(), m.values());
    }
    if (aggregate == Aggregate::sum_norm) {
        const double peak = acc.max();
        if (peak > 0.0)
            for (double& v : acc.values()) v /= peak;
    }
    return acc;
}

bool area_filter(ImageRecord& record, const ScalarField& map, double gamma) {
    if (map.width() != record.width || map.height() != record.height)
        throw std::logic_error("area_filter: map " + std::to_string(map.width()) + "x" +
                               std::to_string(map.height()) + " does not match record " + record.id + " (" +
                               std::to_string(record.width) + "x" + std::to_string(record.height) + ")");
    const double area = static_cast<double>(record.width) * static_cast<double>(record.height);
    const double sum = kernels::omp::field_sum(map.values(), map.width(), map.height());
    record.relevancy_fraction = sum / area;
    const bool keep = sum >= gamma * area;
    advance_status(record, keep ? RecordStatus::kept : RecordStatus::filtered_area);
    return keep;
}

std::vector<ImageRecord> balance_polarity(std::vector<ImageRecord> records) {
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].status != RecordStatus::kept) continue;
        (records[i].query.polarity == Polarity::positive ? pos : neg).push_back(i);
    }
    if (pos.empty() || neg.empty())
        throw StageError("balance", "cannot balance: " + std::to_string(pos.size()) + " positive and " +
                                        std::to_string(neg.size()) + " negative kept images");
    auto& larger = pos.size() > neg.size() ? pos : neg;
    const std::size_t excess = larger.size() - std::min(pos.size(), neg.size());
    std::sort(larger.begin(), larger.end(), [&](std::size_t a, std::size_t b) {
        if (records[a].rank != records[b].rank) return records[a].rank > records[b].rank;
        return records[a].id > records[b].id;
    });
    for (std::size_t i = 0; i < excess; ++i) advance_status(records[larger[i]], RecordStatus::dropped_balance);
    return records;
}

FilterOutcome relevancy_filter(ImageRecord& record, const Image& image, Captioner& captioner,
                               Segmenter& segmenter, const Lexicon& lexicon,
                               std::span<const std::string> lexnames, double gamma, Aggregate aggregate) {
    FilterOutcome out;
    record.caption = caption_image(image, record.id, captioner);
    if (!record.caption->empty()) out.phrases = extract_domain_phrases(*record.caption, lexnames, lexicon);
    if (out.phrases.domain_phrases.empty()) {
        advance_status(record, RecordStatus::filtered_caption);
        return out;
    }
    out.map = build_relevancy_map(image, out.phrases, segmenter, aggregate);
    area_filter(record, out.map, gamma);
    return out;
}

}  // namespace appeal
