// Copyright 2026 The appeal authors
// SPDX-License-Identifier: Apache-2.0

#include "appeal/lexicon.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>

namespace appeal {

namespace {

constexpr std::array<std::string_view, 45> kLexnames = {
    "adj.all",          "adj.pert",         "adv.all",           "noun.Tops",        "noun.act",
    "noun.animal",      "noun.artifact",    "noun.attribute",    "noun.body",        "noun.cognition",
    "noun.communication", "noun.event",     "noun.feeling",      "noun.food",        "noun.group",
    "noun.location",    "noun.motive",      "noun.object",       "noun.person",      "noun.phenomenon",
    "noun.plant",       "noun.possession",  "noun.process",      "noun.quantity",    "noun.relation",
    "noun.shape",       "noun.state",       "noun.substance",    "noun.time",        "verb.body",
    "verb.change",      "verb.cognition",   "verb.communication", "verb.competition", "verb.consumption",
    "verb.contact",     "verb.creation",    "verb.emotion",      "verb.motion",      "verb.perception",
    "verb.possession",  "verb.social",      "verb.stative",      "verb.weather",     "adj.ppl"};

Lexicon::Pos pos_from_sstype(int ss_type) {
    switch (ss_type) {
        case 1: return Lexicon::noun;
        case 2: return Lexicon::verb;
        case 3:
        case 5: return Lexicon::adj;
        case 4: return Lexicon::adv;
        default: throw std::runtime_error("bad WordNet ss_type " + std::to_string(ss_type));
    }
}

struct Rule {
    std::string_view suffix;
    std::string_view ending;
    Lexicon::Pos pos;
};

constexpr Rule kRules[] = {
    {"s", "", Lexicon::noun},    {"ses", "s", Lexicon::noun},  {"xes", "x", Lexicon::noun},
    {"zes", "z", Lexicon::noun}, {"ches", "ch", Lexicon::noun}, {"shes", "sh", Lexicon::noun},
    {"men", "man", Lexicon::noun}, {"ies", "y", Lexicon::noun},
    {"s", "", Lexicon::verb},    {"ies", "y", Lexicon::verb},  {"es", "e", Lexicon::verb},
    {"es", "", Lexicon::verb},   {"ed", "e", Lexicon::verb},   {"ed", "", Lexicon::verb},
    {"ing", "e", Lexicon::verb}, {"ing", "", Lexicon::verb},
    {"er", "", Lexicon::adj},    {"est", "", Lexicon::adj},    {"er", "e", Lexicon::adj},
    {"est", "e", Lexicon::adj},
};

}  // namespace

std::string_view lexname(int lexfile) {
    if (lexfile < 0 || lexfile >= static_cast<int>(kLexnames.size())) return "unknown";
    return kLexnames[static_cast<std::size_t>(lexfile)];
}

int lexfile_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kLexnames.size(); ++i)
        if (kLexnames[i] == name) return static_cast<int>(i);
    return -1;
}

void Lexicon::add(std::string lemma, Pos pos, int lexfile) {
    auto& e = entries_[std::move(lemma)];
    e.pos |= pos;
    auto it = std::lower_bound(e.lexfiles.begin(), e.lexfiles.end(), lexfile);
    if (it == e.lexfiles.end() || *it != lexfile) e.lexfiles.insert(it, lexfile);
}

const Lexicon::Entry* Lexicon::find(std::string_view lemma) const {
    auto it = entries_.find(std::string(lemma));
    return it == entries_.end() ? nullptr : &it->second;
}

namespace {

// Detachment candidates plus the undoubling case that WordNet lists as
// exceptions ("sitting" -> "sit", "chopped" -> "chop").
std::vector<std::pair<std::string, Lexicon::Pos>> detach(std::string_view word) {
    std::vector<std::pair<std::string, Lexicon::Pos>> out;
    for (const auto& r : kRules) {
        if (word.size() <= r.suffix.size() || !word.ends_with(r.suffix)) continue;
        std::string base(word.substr(0, word.size() - r.suffix.size()));
        if (r.pos == Lexicon::verb && r.ending.empty() && (r.suffix == "ing" || r.suffix == "ed") &&
            base.size() >= 3 && base[base.size() - 1] == base[base.size() - 2] &&
            std::string_view("aeiou").find(base.back()) == std::string_view::npos)
            out.emplace_back(base.substr(0, base.size() - 1), r.pos);
        base += r.ending;
        out.emplace_back(std::move(base), r.pos);
    }
    return out;
}

}  // namespace

std::vector<std::string> Lexicon::base_forms(std::string_view word) const {
    std::vector<std::string> out;
    if (find(word)) out.emplace_back(word);
    for (auto& [base, pos] : detach(word)) {
        const Entry* e = find(base);
        if (e && (e->pos & pos) && std::find(out.begin(), out.end(), base) == out.end())
            out.push_back(std::move(base));
    }
    return out;
}

std::uint8_t Lexicon::pos_of(std::string_view word) const {
    std::uint8_t pos = 0;
    if (const Entry* e = find(word)) pos |= e->pos;
    for (const auto& [base, p] : detach(word))
        if (const Entry* e = find(base); e && (e->pos & p)) pos |= p;
    return pos;
}

std::vector<std::string> Lexicon::lexnames_of(std::string_view word) const {
    std::vector<int> files;
    for (const auto& base : base_forms(word))
        for (int f : find(base)->lexfiles) files.push_back(f);
    std::sort(files.begin(), files.end());
    files.erase(std::unique(files.begin(), files.end()), files.end());
    std::vector<std::string> out;
    for (int f : files) out.emplace_back(lexname(f));
    return out;
}

void Lexicon::read_index_sense(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open " + file.string());
    std::string line;
    while (std::getline(in, line)) {
        // lemma%ss_type:lex_filenum:lex_id:head_word:head_id offset sense_number tag_cnt
        const auto pct = line.find('%');
        if (pct == std::string::npos) continue;
        const auto c1 = line.find(':', pct);
        const auto c2 = line.find(':', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos) continue;
        const int ss_type = std::stoi(line.substr(pct + 1, c1 - pct - 1));
        const int lexfile = std::stoi(line.substr(c1 + 1, c2 - c1 - 1));
        add(line.substr(0, pct), pos_from_sstype(ss_type), lexfile);
    }
}

void Lexicon::read_compact(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open " + file.string());
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto t1 = line.find('\t');
        const auto t2 = line.find('\t', t1 + 1);
        if (t1 == std::string::npos || t2 == std::string::npos)
            throw std::runtime_error("malformed lexicon line: " + line);
        Entry e;
        for (char c : line.substr(t1 + 1, t2 - t1 - 1)) {
            switch (c) {
                case 'n': e.pos |= noun; break;
                case 'v': e.pos |= verb; break;
                case 'a': e.pos |= adj; break;
                case 'r': e.pos |= adv; break;
                default: throw std::runtime_error("bad POS letter in lexicon: " + line);
            }
        }
        std::istringstream files(line.substr(t2 + 1));
        for (std::string f; std::getline(files, f, ',');) e.lexfiles.push_back(std::stoi(f));
        std::sort(e.lexfiles.begin(), e.lexfiles.end());
        entries_[line.substr(0, t1)] = std::move(e);
    }
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
    Lexicon lex;
    if (std::filesystem::is_directory(path))
        lex.read_index_sense(path / "index.sense");
    else
        lex.read_compact(path);
    if (lex.entries_.empty()) throw std::runtime_error("empty lexicon: " + path.string());
    return lex;
}

const Lexicon& Lexicon::shared() {
    static const Lexicon lex = load(std::filesystem::path(APPEAL_DATA_DIR) / "wordnet" / "lexicon.tsv");
    return lex;
}

void Lexicon::write_compact(const std::filesystem::path& path) const {
    std::map<std::string, const Entry*> sorted;
    for (const auto& [k, v] : entries_) sorted.emplace(k, &v);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "# lemma\tpos\tlexfiles (derived from WordNet 3.1 index.sense; see LICENSE)\n";
    for (const auto& [lemma, e] : sorted) {
        out << lemma << '\t';
        if (e->pos & noun) out << 'n';
        if (e->pos & verb) out << 'v';
        if (e->pos & adj) out << 'a';
        if (e->pos & adv) out << 'r';
        out << '\t';
        for (std::size_t i = 0; i < e->lexfiles.size(); ++i) out << (i ? "," : "") << e->lexfiles[i];
        out << '\n';
    }
}

}  // namespace appeal
