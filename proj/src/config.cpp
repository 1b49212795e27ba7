// Copyright 2026 The appeal authors
// SPDX-License-Identifier: Apache-2.0

#include "appeal/config.hpp"

#include <algorithm>
#include <functional>
#include <set>

#include <toml.hpp>

#include "appeal/error.hpp"

namespace appeal {

namespace {

[[noreturn]] void fail_at(const toml::node& node, const std::string& msg) {
    const auto& src = node.source();
    throw ConfigError(msg, static_cast<int>(src.begin.line), static_cast<int>(src.begin.column));
}

json to_json_value(const toml::node& node) {
    if (const auto* t = node.as_table()) {
        json out = json::object();
        for (const auto& [k, v] : *t) out[std::string(k.str())] = to_json_value(v);
        return out;
    }
    if (const auto* a = node.as_array()) {
        json out = json::array();
        for (const auto& v : *a) out.push_back(to_json_value(v));
        return out;
    }
    if (const auto* s = node.as_string()) return s->get();
    if (const auto* i = node.as_integer()) return i->get();
    if (const auto* f = node.as_floating_point()) return f->get();
    if (const auto* b = node.as_boolean()) return b->get();
    fail_at(node, "unsupported value type (dates are not allowed)");
}

// Dispatches each key of a table to a handler; unhandled keys are errors.
class Section {
public:
    Section(const toml::node& node, std::string prefix) : prefix_(std::move(prefix)) {
        table_ = node.as_table();
        if (!table_) fail_at(node, "'" + prefix_ + "' must be a table");
    }

    void run(const std::map<std::string, std::function<void(const toml::node&, const std::string&)>>& handlers) const {
        for (const auto& [k, node] : *table_) {
            const std::string key(k.str());
            const std::string full = prefix_.empty() ? key : prefix_ + "." + key;
            auto it = handlers.find(key);
            if (it == handlers.end()) fail_at(node, "unknown key '" + full + "'");
            it->second(node, full);
        }
    }

private:
    const toml::table* table_ = nullptr;
    std::string prefix_;
};

double number(const toml::node& n, const std::string& key) {
    if (auto v = n.value<double>()) return *v;
    fail_at(n, "'" + key + "' must be a number");
}

int integer(const toml::node& n, const std::string& key) {
    if (const auto* i = n.as_integer()) return static_cast<int>(i->get());
    fail_at(n, "'" + key + "' must be an integer");
}

std::uint64_t unsigned_integer(const toml::node& n, const std::string& key) {
    if (const auto* i = n.as_integer(); i && i->get() >= 0) return static_cast<std::uint64_t>(i->get());
    fail_at(n, "'" + key + "' must be a non-negative integer");
}

bool boolean(const toml::node& n, const std::string& key) {
    if (const auto* b = n.as_boolean()) return b->get();
    fail_at(n, "'" + key + "' must be true or false");
}

std::string string(const toml::node& n, const std::string& key) {
    if (const auto* s = n.as_string()) return s->get();
    fail_at(n, "'" + key + "' must be a string");
}

std::vector<int> int_array(const toml::node& n, const std::string& key) {
    const auto* a = n.as_array();
    if (!a) fail_at(n, "'" + key + "' must be an array of integers");
    std::vector<int> out;
    for (const auto& v : *a) out.push_back(integer(v, key));
    return out;
}

TrainStage parse_stage(const toml::node& node, const std::string& prefix) {
    TrainStage s;
    Section(node, prefix).run({
        {"freeze_encoder", [&](const toml::node& n, const std::string& k) { s.freeze_encoder = boolean(n, k); }},
        {"epochs", [&](const toml::node& n, const std::string& k) { s.epochs = integer(n, k); }},
        {"learning_rate", [&](const toml::node& n, const std::string& k) { s.learning_rate = number(n, k); }},
        {"batch_size", [&](const toml::node& n, const std::string& k) { s.batch_size = integer(n, k); }},
    });
    return s;
}

RunConfig from_table(const toml::table& root, const std::filesystem::path& path) {
    RunConfig cfg;
    cfg.config_path = path;
    const auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
    auto resolve = [&](const std::string& p) {
        std::filesystem::path fp(p);
        return fp.is_absolute() ? fp : base / fp;
    };
    bool has_domain = false, has_workdir = false;

    Section(root, "").run({
        {"domain", [&](const toml::node& n, const std::string& k) {
             cfg.domain_path = resolve(string(n, k));
             has_domain = true;
         }},
        {"workdir", [&](const toml::node& n, const std::string& k) {
             cfg.workdir = resolve(string(n, k));
             has_workdir = true;
         }},
        {"seed", [&](const toml::node& n, const std::string& k) { cfg.seed = unsigned_integer(n, k); }},
        {"backends", [&](const toml::node& n, const std::string& k) {
             const auto* t = n.as_table();
             if (!t) fail_at(n, "'backends' must be a table");
             for (const auto& [rk, rnode] : *t) {
                 const std::string role_name(rk.str());
                 Role role;
                 try {
                     role = role_from_string(role_name);
                 } catch (const std::exception&) {
                     fail_at(rnode, "unknown backend role '" + role_name + "'");
                 }
                 BackendSpec spec;
                 if (const auto* s = rnode.as_string()) {
                     spec.impl = s->get();
                 } else if (const auto* rt = rnode.as_table()) {
                     json options = to_json_value(*rt);
                     if (!options.contains("impl") || !options["impl"].is_string())
                         fail_at(rnode, "'" + k + "." + role_name + "' needs an 'impl' string");
                     spec.impl = options["impl"].get<std::string>();
                     options.erase("impl");
                     // Relative file options resolve against the config directory.
                     for (const char* file_key : {"captions", "corpus"})
                         if (options.contains(file_key) && options[file_key].is_string())
                             options[file_key] = resolve(options[file_key].get<std::string>()).string();
                     spec.options = std::move(options);
                 } else {
                     fail_at(rnode, "'" + k + "." + role_name + "' must be an id string or a table");
                 }
                 const auto ids = available_implementations(role);
                 if (std::find(ids.begin(), ids.end(), spec.impl) == ids.end())
                     fail_at(rnode, "unknown implementation '" + spec.impl + "' for backend role '" + role_name + "'");
                 cfg.backends[role] = std::move(spec);
             }
         }},
        {"fetch", [&](const toml::node& n, const std::string& k) {
             Section(n, k).run({
                 {"top_k", [&](const toml::node& v, const std::string& kk) { cfg.fetch.top_k = integer(v, kk); }},
             });
         }},
        {"relevancy", [&](const toml::node& n, const std::string& k) {
             Section(n, k).run({
                 {"aggregate", [&](const toml::node& v, const std::string& kk) {
                      try {
                          cfg.aggregate = aggregate_from_string(string(v, kk));
                      } catch (const ValidationError& e) {
                          fail_at(v, e.what());
                      }
                  }},
             });
         }},
        {"synthesis", [&](const toml::node& n, const std::string& k) {
             auto& s = cfg.synthesis;
             Section(n, k).run({
                 {"bases", [&](const toml::node& v, const std::string& kk) { s.bases = integer(v, kk); }},
                 {"embedding_exemplars", [&](const toml::node& v, const std::string& kk) { s.embedding_exemplars = integer(v, kk); }},
                 {"inversion_steps", [&](const toml::node& v, const std::string& kk) { s.inversion.steps = integer(v, kk); }},
                 {"inversion_learning_rate", [&](const toml::node& v, const std::string& kk) { s.inversion.learning_rate = number(v, kk); }},
                 {"inversion_batch_size", [&](const toml::node& v, const std::string& kk) { s.inversion.batch_size = integer(v, kk); }},
                 {"mask_threshold", [&](const toml::node& v, const std::string& kk) { s.inpaint.mask_threshold = number(v, kk); }},
                 {"strength", [&](const toml::node& v, const std::string& kk) { s.inpaint.strength = number(v, kk); }},
                 {"guidance_scale", [&](const toml::node& v, const std::string& kk) { s.inpaint.guidance_scale = number(v, kk); }},
                 {"sampler", [&](const toml::node& v, const std::string& kk) { s.inpaint.sampler = string(v, kk); }},
             });
         }},
        {"pairs", [&](const toml::node& n, const std::string& k) {
             Section(n, k).run({
                 {"per_base", [&](const toml::node& v, const std::string& kk) { cfg.pairs_per_base = integer(v, kk); }},
             });
         }},
        {"training", [&](const toml::node& n, const std::string& k) {
             auto& t = cfg.training;
             Section(n, k).run({
                 {"optimizer", [&](const toml::node& v, const std::string& kk) { t.optimizer = string(v, kk); }},
                 {"weight_decay", [&](const toml::node& v, const std::string& kk) { t.adamw.weight_decay = number(v, kk); }},
                 {"validation_fraction", [&](const toml::node& v, const std::string& kk) { t.validation_fraction = number(v, kk); }},
                 {"comparator_hidden", [&](const toml::node& v, const std::string& kk) { cfg.comparator_hidden = int_array(v, kk); }},
                 {"estimator_hidden", [&](const toml::node& v, const std::string& kk) { cfg.estimator_hidden = int_array(v, kk); }},
                 {"stages", [&](const toml::node& v, const std::string& kk) {
                      const auto* arr = v.as_array();
                      if (!arr) fail_at(v, "'" + kk + "' must be an array of tables");
                      t.stages.clear();
                      for (std::size_t i = 0; i < arr->size(); ++i)
                          t.stages.push_back(parse_stage((*arr)[i], kk + "[" + std::to_string(i) + "]"));
                  }},
             });
         }},
        {"labeling", [&](const toml::node& n, const std::string& k) {
             Section(n, k).run({
                 {"exemplars", [&](const toml::node& v, const std::string& kk) { cfg.labeling.exemplars = integer(v, kk); }},
                 {"max_failure_rate", [&](const toml::node& v, const std::string& kk) { cfg.labeling.max_failure_rate = number(v, kk); }},
             });
         }},
        {"heatmap", [&](const toml::node& n, const std::string& k) {
             Section(n, k).run({
                 {"window", [&](const toml::node& v, const std::string& kk) { cfg.heatmap.window = integer(v, kk); }},
                 {"stride", [&](const toml::node& v, const std::string& kk) { cfg.heatmap.stride = integer(v, kk); }},
                 {"normalization", [&](const toml::node& v, const std::string& kk) { cfg.heatmap.normalization = string(v, kk); }},
             });
         }},
        {"enhance", [&](const toml::node& n, const std::string& k) {
             auto& e = cfg.enhance;
             Section(n, k).run({
                 {"denoising_strength", [&](const toml::node& v, const std::string& kk) { e.denoising_strength = number(v, kk); }},
                 {"guidance_scale", [&](const toml::node& v, const std::string& kk) { e.guidance_scale = number(v, kk); }},
                 {"sampler", [&](const toml::node& v, const std::string& kk) { e.sampler = string(v, kk); }},
                 {"negative_prompt", [&](const toml::node& v, const std::string& kk) { e.negative_prompt = string(v, kk); }},
                 {"depth_conditioning", [&](const toml::node& v, const std::string& kk) { e.depth_conditioning = boolean(v, kk); }},
                 {"depth_preprocessor", [&](const toml::node& v, const std::string& kk) { e.depth_preprocessor = string(v, kk); }},
                 {"seed", [&](const toml::node& v, const std::string& kk) { e.seed = unsigned_integer(v, kk); }},
             });
         }},
    });

    if (!has_domain) throw ValidationError("domain", "missing required key (path to the domain config)");
    if (!has_workdir) throw ValidationError("workdir", "missing required key");
    if (!std::filesystem::exists(cfg.domain_path))
        throw ValidationError("domain", "file not found: " + cfg.domain_path.string());
    cfg.domain = load_domain_config(cfg.domain_path);
    cfg.training.validate();
    cfg.enhance.validate();
    if (cfg.fetch.top_k < 1) throw ValidationError("fetch.top_k", "must be >= 1");
    if (cfg.synthesis.bases < 1) throw ValidationError("synthesis.bases", "must be >= 1");
    if (cfg.synthesis.embedding_exemplars < 1) throw ValidationError("synthesis.embedding_exemplars", "must be >= 1");
    if (!(cfg.synthesis.inpaint.mask_threshold > 0.0 && cfg.synthesis.inpaint.mask_threshold <= 1.0))
        throw ValidationError("synthesis.mask_threshold", "must be in (0,1]");
    if (cfg.pairs_per_base < 1) throw ValidationError("pairs.per_base", "must be >= 1");
    if (cfg.labeling.exemplars < 1) throw ValidationError("labeling.exemplars", "must be >= 1");
    if (cfg.heatmap.stride <= 0 || cfg.heatmap.window < cfg.heatmap.stride)
        throw ValidationError("heatmap", "need 0 < stride <= window");
    return cfg;
}

}  // namespace

RunConfig parse_run_config(std::string_view text, const std::filesystem::path& path) {
    try {
        return from_table(toml::parse(text, path.string()), path);
    } catch (const toml::parse_error& e) {
        throw ConfigError(path.string() + ": " + std::string(e.description()),
                          static_cast<int>(e.source().begin.line), static_cast<int>(e.source().begin.column));
    }
}

RunConfig load_run_config(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw ValidationError("--config", "file not found: " + path.string());
    try {
        return from_table(toml::parse_file(path.string()), path);
    } catch (const toml::parse_error& e) {
        throw ConfigError(path.string() + ": " + std::string(e.description()),
                          static_cast<int>(e.source().begin.line), static_cast<int>(e.source().begin.column));
    }
}

std::uint64_t stage_seed(const RunConfig& cfg, std::string_view stage) { return derive_seed(cfg.seed, stage); }

}  // namespace appeal
