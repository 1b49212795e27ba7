// Copyright 2026 The appeal authors
// SPDX-License-Identifier: Apache-2.0

#include "appeal/domain.hpp"

#include <set>
#include <stdexcept>

#include <toml.hpp>

#include "appeal/error.hpp"
#include "appeal/util.hpp"

namespace appeal {

std::string_view to_string(Polarity p) noexcept {
    return p == Polarity::positive ? "positive" : "negative";
}

Polarity polarity_from_string(std::string_view s) {
    if (s == "positive") return Polarity::positive;
    if (s == "negative") return Polarity::negative;
    throw ValidationError("polarity", "expected positive|negative, got '" + std::string(s) + "'");
}

namespace {

void require_words(const std::vector<std::string>& words, const std::string& field) {
    if (words.empty()) throw ValidationError(field, "must not be empty");
    for (const auto& w : words)
        if (trim(w).empty()) throw ValidationError(field, "contains a blank string");
}

}  // namespace

void DomainConfig::validate() const {
    if (trim(name).empty()) throw ValidationError("name", "must not be blank");
    require_words(nouns, "nouns");
    std::set<std::string> seen;
    for (const auto& n : nouns)
        if (!seen.insert(trim(n)).second) throw ValidationError("nouns", "duplicate noun '" + n + "'");
    require_words(positive_adjectives, "positive_adjectives");
    if (negative_groups.empty()) throw ValidationError("negative_groups", "must not be empty");
    for (const auto& g : negative_groups) {
        if (trim(g.name).empty()) throw ValidationError("negative_groups", "blank group name");
        require_words(g.adjectives, "negative_groups." + g.name);
    }
    require_words(lexnames, "lexnames");
    if (!(gamma > 0.0 && gamma < 1.0)) throw ValidationError("gamma", "must satisfy 0 < gamma < 1");
    if (output_size <= 0) throw ValidationError("output_size", "must be positive");
    if (synthesis_plan.backgrounds_per_base <= 0)
        throw ValidationError("synthesis_plan.backgrounds_per_base", "must be positive");
    if (synthesis_plan.alphas_per_background <= 0)
        throw ValidationError("synthesis_plan.alphas_per_background", "must be positive");
}

namespace {

[[noreturn]] void fail_at(const toml::node& node, const std::string& msg) {
    const auto& src = node.source();
    throw ConfigError(msg, static_cast<int>(src.begin.line), static_cast<int>(src.begin.column));
}

std::vector<std::string> string_array(const toml::node& node, const std::string& key) {
    const auto* arr = node.as_array();
    if (!arr) fail_at(node, "'" + key + "' must be an array of strings");
    std::vector<std::string> out;
    for (const auto& el : *arr) {
        const auto* s = el.as_string();
        if (!s) fail_at(el, "'" + key + "' must contain only strings");
        out.push_back(s->get());
    }
    return out;
}

template <class T>
T scalar(const toml::node& node, const std::string& key) {
    if constexpr (std::is_same_v<T, double>) {
        if (auto v = node.value<double>()) return *v;
        fail_at(node, "'" + key + "' must be a number");
    } else if constexpr (std::is_same_v<T, int>) {
        if (node.is_integer()) return static_cast<int>(node.as_integer()->get());
        fail_at(node, "'" + key + "' must be an integer");
    } else {
        if (const auto* s = node.as_string()) return s->get();
        fail_at(node, "'" + key + "' must be a string");
    }
}

DomainConfig from_table(const toml::table& tbl) {
    DomainConfig cfg;
    std::set<std::string> present;
    for (const auto& [k, node] : tbl) {
        const std::string key(k.str());
        present.insert(key);
        if (key == "name") {
            cfg.name = scalar<std::string>(node, key);
        } else if (key == "nouns") {
            cfg.nouns = string_array(node, key);
        } else if (key == "positive_adjectives") {
            cfg.positive_adjectives = string_array(node, key);
        } else if (key == "negative_groups") {
            const auto* groups = node.as_table();
            if (!groups) fail_at(node, "'negative_groups' must be a table of name -> string array");
            for (const auto& [gk, gnode] : *groups)
                cfg.negative_groups.push_back(
                    {std::string(gk.str()), string_array(gnode, "negative_groups." + std::string(gk.str()))});
        } else if (key == "lexnames") {
            cfg.lexnames = string_array(node, key);
        } else if (key == "gamma") {
            cfg.gamma = scalar<double>(node, key);
        } else if (key == "output_size") {
            cfg.output_size = scalar<int>(node, key);
        } else if (key == "synthesis_plan") {
            const auto* plan = node.as_table();
            if (!plan) fail_at(node, "'synthesis_plan' must be a table");
            for (const auto& [pk, pnode] : *plan) {
                const std::string pkey(pk.str());
                if (pkey == "backgrounds_per_base")
                    cfg.synthesis_plan.backgrounds_per_base = scalar<int>(pnode, pkey);
                else if (pkey == "alphas_per_background")
                    cfg.synthesis_plan.alphas_per_background = scalar<int>(pnode, pkey);
                else
                    fail_at(pnode, "unknown key 'synthesis_plan." + pkey + "'");
            }
        } else {
            fail_at(node, "unknown key '" + key + "'");
        }
    }
    for (const char* required : {"name", "nouns", "positive_adjectives", "negative_groups",
                                 "lexnames", "gamma", "output_size", "synthesis_plan"}) {
        if (!present.count(required))
            throw ValidationError(required, "missing required key");
    }
    cfg.validate();
    return cfg;
}

}  // namespace

DomainConfig parse_domain_config(std::string_view text, std::string_view source) {
    try {
        return from_table(toml::parse(text, source));
    } catch (const toml::parse_error& e) {
        throw ConfigError(std::string(source) + ": " + std::string(e.description()),
                          static_cast<int>(e.source().begin.line),
                          static_cast<int>(e.source().begin.column));
    }
}

DomainConfig load_domain_config(const std::filesystem::path& path) {
    try {
        return from_table(toml::parse_file(path.string()));
    } catch (const toml::parse_error& e) {
        throw ConfigError(path.string() + ": " + std::string(e.description()),
                          static_cast<int>(e.source().begin.line),
                          static_cast<int>(e.source().begin.column));
    }
}

json to_json(const SearchQuery& q) {
    return {{"text", q.text},
            {"polarity", to_string(q.polarity)},
            {"negative_group", q.negative_group ? json(*q.negative_group) : json(nullptr)}};
}

SearchQuery query_from_json(const json& j) {
    SearchQuery q;
    q.text = j.at("text").get<std::string>();
    q.polarity = polarity_from_string(j.at("polarity").get<std::string>());
    if (j.contains("negative_group") && !j["negative_group"].is_null())
        q.negative_group = j["negative_group"].get<std::string>();
    return q;
}

std::vector<SearchQuery> generate_queries(const DomainConfig& cfg) {
    std::vector<SearchQuery> out;
    for (const auto& adj : cfg.positive_adjectives)
        for (const auto& noun : cfg.nouns)
            out.push_back({trim(adj) + " " + trim(noun), Polarity::positive, std::nullopt});
    for (const auto& group : cfg.negative_groups)
        for (const auto& adj : group.adjectives)
            for (const auto& noun : cfg.nouns)
                out.push_back({trim(adj) + " " + trim(noun), Polarity::negative, group.name});
    return out;
}

}  // namespace appeal
