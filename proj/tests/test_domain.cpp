// Copyright 2026 The appeal authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <set>

#include "appeal/domain.hpp"
#include "appeal/error.hpp"

using namespace appeal;

namespace {

const char* kFood = R"(
name = "food"
nouns = ["burger", "cake", "chicken", "cookie", "food", "rice", "pizza", "pasta", "salad", "steak", "yogurt"]
positive_adjectives = ["delicious"]
lexnames = ["noun.food"]
gamma = 0.4
output_size = 512
[negative_groups]
burnt = ["burnt"]
spoiled = ["moldy", "rotten"]
[synthesis_plan]
backgrounds_per_base = 3
alphas_per_background = 6
)";

std::string with(std::string text, const std::string& from, const std::string& to) {
    const auto pos = text.find(from);
    REQUIRE(pos != std::string::npos);
    return text.replace(pos, from.size(), to);
}

}  // namespace

TEST_CASE("food word lists give a valid domain") {
    const DomainConfig d = parse_domain_config(kFood);
    CHECK(d.nouns.size() == 11);
    CHECK(d.gamma == 0.4);
    REQUIRE(d.negative_groups.size() == 2);
    CHECK(d.negative_groups[0].name == "burnt");
    CHECK(d.negative_groups[1].adjectives == std::vector<std::string>{"moldy", "rotten"});
    CHECK(d.synthesis_plan == SynthesisPlan{3, 6});
}

TEST_CASE("queries are the adjective-major cross product with polarity tags") {
    const DomainConfig d = parse_domain_config(kFood);
    const auto q = generate_queries(d);
    CHECK(q.size() == (1 + 3) * 11);
    CHECK(q[0].text == "delicious burger");
    CHECK(q[0].polarity == Polarity::positive);
    CHECK_FALSE(q[0].negative_group.has_value());
    CHECK(q[1].text == "delicious cake");
    CHECK(q[11].text == "burnt burger");
    CHECK(q[11].negative_group == "burnt");
    CHECK(q[22].text == "moldy burger");
    CHECK(q[22].negative_group == "spoiled");
    // Every query splits into one configured adjective and one configured noun.
    std::set<std::string> nouns(d.nouns.begin(), d.nouns.end());
    std::set<std::string> texts;
    for (const auto& s : q) {
        const auto sp = s.text.find(' ');
        CHECK(nouns.count(s.text.substr(sp + 1)) == 1);
        texts.insert(s.text);
    }
    CHECK(texts.size() == q.size());
}

TEST_CASE("query json round trip") {
    const auto q = generate_queries(parse_domain_config(kFood));
    for (const auto& s : q) CHECK(query_from_json(to_json(s)) == s);
}

TEST_CASE("unknown keys are rejected with a line number") {
    try {
        parse_domain_config(std::string(kFood) + "colour = \"red\"\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.line() == 14);
        CHECK(std::string(e.what()).find("colour") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_domain_config(with(kFood, "backgrounds_per_base", "backgrounds")), ConfigError);
}

TEST_CASE("syntax errors carry a position") {
    try {
        parse_domain_config("name = \n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.line() == 1);
    }
}

TEST_CASE("invariant violations name the field") {
    auto field_of = [](const std::string& text) {
        try {
            parse_domain_config(text);
        } catch (const ValidationError& e) {
            return e.field();
        }
        return std::string("<none>");
    };
    CHECK(field_of(with(kFood, "gamma = 0.4", "gamma = 1.0")) == "gamma");
    CHECK(field_of(with(kFood, "gamma = 0.4", "gamma = 0.0")) == "gamma");
    CHECK(field_of(with(kFood, "output_size = 512", "output_size = 0")) == "output_size");
    CHECK(field_of(with(kFood, R"(positive_adjectives = ["delicious"])", "positive_adjectives = []")) ==
          "positive_adjectives");
    CHECK(field_of(with(kFood, R"(burnt = ["burnt"])", "burnt = []")) == "negative_groups.burnt");
    CHECK(field_of(with(kFood, R"(nouns = ["burger",)", R"(nouns = ["cake",)")) == "nouns");
    CHECK(field_of(with(kFood, "lexnames = [\"noun.food\"]\n", "")) == "lexnames");
}

TEST_CASE("wrong value types are config errors") {
    CHECK_THROWS_AS(parse_domain_config(with(kFood, "gamma = 0.4", "gamma = \"high\"")), ConfigError);
    CHECK_THROWS_AS(parse_domain_config(with(kFood, "output_size = 512", "output_size = 5.5")), ConfigError);
}

TEST_CASE("shipped domain configs load") {
    for (const char* name : {"food", "room", "vehicle", "landscape"}) {
        CAPTURE(name);
        const auto d = load_domain_config(std::filesystem::path(APPEAL_SOURCE_DIR) / "configs" / (std::string(name) + ".toml"));
        CHECK(d.name == name);
        CHECK_FALSE(generate_queries(d).empty());
    }
    const auto room = load_domain_config(std::filesystem::path(APPEAL_SOURCE_DIR) / "configs/room.toml");
    CHECK(room.synthesis_plan == SynthesisPlan{5, 3});
    CHECK(generate_queries(room).size() == 3 * 5);
}
