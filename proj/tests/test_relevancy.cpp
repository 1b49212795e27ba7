// Copyright 2026 The appeal authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "appeal/error.hpp"
#include "appeal/mocks.hpp"
#include "appeal/relevancy.hpp"
#include "support.hpp"

using namespace appeal;

namespace {

const std::vector<std::string> kFood{"noun.food"};

/// Lexnames of exact lemmas read straight from the shipped table.
std::map<std::string, std::set<std::string>> table_lexnames() {
    std::map<std::string, std::set<std::string>> out;
    std::ifstream in(std::string(APPEAL_SOURCE_DIR) + "/data/wordnet/lexicon.tsv");
    for (std::string line; std::getline(in, line);) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream row(line);
        std::string lemma, pos, files;
        std::getline(row, lemma, '\t');
        std::getline(row, pos, '\t');
        std::getline(row, files);
        std::istringstream fs(files);
        for (std::string f; std::getline(fs, f, ',');) out[lemma].insert(std::string(lexname(std::stoi(f))));
    }
    return out;
}

ImageRecord sized(int w, int h) {
    ImageRecord r;
    r.id = "r";
    r.width = w;
    r.height = h;
    return r;
}

}  // namespace

TEST_CASE("tokenize lowercases and splits on punctuation") {
    CHECK(tokenize("A Plate, of FRIES!") == std::vector<std::string>{"a", "plate", "of", "fries"});
    CHECK(tokenize("").empty());
}

TEST_CASE("domain phrases: a room with a small apple") {
    const auto p = extract_domain_phrases("a room with a small apple", kFood, Lexicon::shared());
    CHECK(p.domain_phrases == std::vector<std::string>{"a small apple"});
    CHECK(p.all_phrases == std::vector<std::string>{"a room", "a small apple"});
    CHECK(head_noun("a small apple", Lexicon::shared()) == "apple");
}

TEST_CASE("domain phrases: a sunset over the sea has none") {
    const auto p = extract_domain_phrases("a sunset over the sea", kFood, Lexicon::shared());
    CHECK(p.domain_phrases.empty());
    CHECK(!p.all_phrases.empty());
}

TEST_CASE("domain phrases: rotten apple and old car") {
    const auto p = extract_domain_phrases("rotten apple and old car", kFood, Lexicon::shared());
    CHECK(p.domain_phrases == std::vector<std::string>{"rotten apple"});
}

TEST_CASE("every kept phrase has a content word whose table entry lists the lexname") {
    const auto table = table_lexnames();
    REQUIRE(table.at("apple").count("noun.food") == 1);
    REQUIRE(table.at("car").count("noun.food") == 0);
    const char* captions[] = {"a bowl of rice next to a cup of coffee", "a car parked near a tree",
                              "two slices of pizza on a wooden table", "a dog eating a burger",
                              "a plate with bread and cheese"};
    for (const char* c : captions) {
        const auto p = extract_domain_phrases(c, kFood, Lexicon::shared());
        for (const auto& phrase : p.domain_phrases) {
            bool found = false;
            for (const auto& w : tokenize(phrase)) {
                auto it = table.find(w);
                if (it != table.end() && it->second.count("noun.food")) found = true;
                // plural heads resolve to their singular entry
                if (w.size() > 1 && w.back() == 's') {
                    auto s = table.find(w.substr(0, w.size() - 1));
                    if (s != table.end() && s->second.count("noun.food")) found = true;
                }
            }
            CHECK_MESSAGE(found, phrase);
        }
    }
}

TEST_CASE("multi-word lexicon nouns merge into one token") {
    const std::vector<std::string> artifact{"noun.artifact"};
    const auto p = extract_domain_phrases("a cozy living room with a couch", artifact, Lexicon::shared());
    REQUIRE(!p.domain_phrases.empty());
    CHECK(p.domain_phrases[0] == "a cozy living room");
}

TEST_CASE("area filter at 0.39 of a 512 square with gamma 0.4 discards") {
    ImageRecord r = sized(512, 512);
    ScalarField m(512, 512, 0.0);
    const int ones = static_cast<int>(0.39 * 512 * 512);
    for (int i = 0; i < ones; ++i) m.values()[static_cast<std::size_t>(i)] = 1.0;
    CHECK_FALSE(area_filter(r, m, 0.4));
    CHECK(r.status == RecordStatus::filtered_area);
    CHECK(*r.relevancy_fraction == doctest::Approx(0.39).epsilon(1e-4));
}

TEST_CASE("area filter on 50 masks matches a pixel-count oracle") {
    SplitMix rng(404);
    int kept = 0;
    for (int i = 0; i < 50; ++i) {
        const int w = 8 + static_cast<int>(rng.below(120)), h = 8 + static_cast<int>(rng.below(120));
        const ScalarField m = testing::random_mask(w, h, rng.uniform(0.2, 0.6), rng);
        long long count = 0;
        for (double v : m.values()) count += v > 0.5 ? 1 : 0;
        const bool oracle = 5 * count >= 2LL * w * h;
        ImageRecord r = sized(w, h);
        CHECK(area_filter(r, m, 0.4) == oracle);
        CHECK(*r.relevancy_fraction == static_cast<double>(count) / (static_cast<double>(w) * h));
        kept += oracle;
    }
    CHECK(kept > 0);
    CHECK(kept < 50);
}

TEST_CASE("area filter rejects a map of the wrong shape") {
    ImageRecord r = sized(10, 10);
    CHECK_THROWS_AS(area_filter(r, ScalarField(10, 11), 0.4), std::logic_error);
}

TEST_CASE("relevancy map aggregation") {
    struct Fixed final : Segmenter {
        std::string id() const override { return "fixed"; }
        ScalarField segment(const Image& img, std::string_view phrase) override {
            ScalarField m(img.width(), img.height(), 0.0);
            if (phrase == "a") m.at(0, 0) = 0.6;
            if (phrase == "b") { m.at(0, 0) = 0.3; m.at(1, 0) = 1.7; }
            return m;
        }
    } seg;
    const Image img(2, 1);
    PhraseSet p{{"a", "b"}, {"a", "b"}};
    const ScalarField mx = build_relevancy_map(img, p, seg, Aggregate::max);
    CHECK(mx.at(0, 0) == 0.6);
    CHECK(mx.at(1, 0) == 1.0);
    const ScalarField sn = build_relevancy_map(img, p, seg, Aggregate::sum_norm);
    CHECK(sn.at(0, 0) == doctest::Approx(0.9));
    CHECK(sn.at(1, 0) == 1.0);
    CHECK(build_relevancy_map(img, PhraseSet{}, seg).max() == 0.0);
    CHECK(aggregate_from_string(to_string(Aggregate::sum_norm)) == Aggregate::sum_norm);
    CHECK_THROWS_AS(aggregate_from_string("mean"), ValidationError);
}

TEST_CASE("relevancy filter screens captions before segmenting") {
    mock::MockCaptioner cap({{"x", "a sunset over the sea"}}, std::string("a plate of food"));
    mock::MockSegmenter seg;
    const Image scene = mock::toy_scene(64, 0.8, 3);
    ImageRecord r = sized(64, 64);
    r.id = "x";
    auto out = relevancy_filter(r, scene, cap, seg, Lexicon::shared(), kFood, 0.04);
    CHECK(r.status == RecordStatus::filtered_caption);
    CHECK(out.map.size() == 0);
    ImageRecord k = sized(64, 64);
    k.id = "y";
    out = relevancy_filter(k, scene, cap, seg, Lexicon::shared(), kFood, 0.04);
    CHECK(k.status == RecordStatus::kept);
    CHECK(*k.caption == "a plate of food");
    CHECK(out.map.max() > 0.0);
}

TEST_CASE("balance drops the highest ranks of the larger side") {
    std::vector<ImageRecord> recs;
    auto add = [&](std::string id, Polarity p, int rank) {
        ImageRecord r;
        r.id = std::move(id);
        r.query.polarity = p;
        r.rank = rank;
        r.status = RecordStatus::kept;
        recs.push_back(r);
    };
    add("p1", Polarity::positive, 1);
    add("p2", Polarity::positive, 5);
    add("p3", Polarity::positive, 5);
    add("p4", Polarity::positive, 2);
    add("n1", Polarity::negative, 9);
    add("n2", Polarity::negative, 1);
    const auto out = balance_polarity(recs);
    CHECK(out[1].status == RecordStatus::dropped_balance);
    CHECK(out[2].status == RecordStatus::dropped_balance);
    CHECK(out[0].status == RecordStatus::kept);
    CHECK(out[3].status == RecordStatus::kept);
    CHECK(out[4].status == RecordStatus::kept);
    recs.resize(4);
    CHECK_THROWS_AS(balance_polarity(recs), StageError);
}
