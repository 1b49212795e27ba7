// Copyright 2026 The appeal authors
// SPDX-License-Identifier: Apache-2.0

#include "appeal/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>
#include <unistd.h>

#include "appeal/acquisition.hpp"
#include "appeal/appealmap.hpp"
#include "appeal/config.hpp"
#include "appeal/error.hpp"
#include "appeal/eval.hpp"
#include "appeal/labeling.hpp"
#include "appeal/lexicon.hpp"
#include "appeal/relevancy.hpp"
#include "appeal/synthesis.hpp"

namespace appeal::cli {

namespace fs = std::filesystem;

namespace {

// Manifest and artifact names inside <workdir>/<domain>/.
constexpr const char* kQueries = "queries.jsonl";
constexpr const char* kFetch = "fetch.jsonl";
constexpr const char* kFetchErrors = "fetch_errors.jsonl";
constexpr const char* kFilter = "filter.jsonl";
constexpr const char* kBases = "bases.json";
constexpr const char* kSynthetic = "synthetic.jsonl";
constexpr const char* kSynthFailures = "synth_failures.jsonl";
constexpr const char* kPairs = "pairs.jsonl";
constexpr const char* kComparator = "models/comparator.bin";
constexpr const char* kExemplars = "exemplars.json";
constexpr const char* kRawScores = "raw_scores.jsonl";
constexpr const char* kLabels = "labels.jsonl";
constexpr const char* kLabelFailures = "label_failures.jsonl";
constexpr const char* kEstimator = "models/estimator.bin";
constexpr const char* kPositiveEmbedding = "embeddings/positive.bin";

std::vector<json> rows_of(const auto& items) {
    std::vector<json> rows;
    rows.reserve(items.size());
    for (const auto& i : items) rows.push_back(to_json(i));
    return rows;
}

std::string file_digest(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return key_hash(ss.str());
}

json spec_json(const BackendSpec& s) { return {{"impl", s.impl}, {"options", s.options}}; }

/// Exclusive marker file; a second stage run on the same workdir fails fast.
class WorkdirLock {
public:
    explicit WorkdirLock(fs::path path) : path_(std::move(path)) {
        fs::create_directories(path_.parent_path());
        std::FILE* f = std::fopen(path_.c_str(), "wx");
        if (!f)
            throw StageError("lock", "workdir is in use (" + path_.string() +
                                         " exists); delete it if no other run is active");
        std::fprintf(f, "%ld\n", static_cast<long>(::getpid()));
        std::fclose(f);
    }
    ~WorkdirLock() {
        std::error_code ec;
        fs::remove(path_, ec);
    }
    WorkdirLock(const WorkdirLock&) = delete;
    WorkdirLock& operator=(const WorkdirLock&) = delete;

private:
    fs::path path_;
};

class Workspace {
public:
    Workspace(RunConfig cfg, bool force)
        : cfg_(std::move(cfg)), root_(cfg_.workdir / cfg_.domain.name),
          store_(cfg_.workdir, cfg_.domain.name), force_(force) {
        fs::create_directories(root_);
    }

    const RunConfig& cfg() const noexcept { return cfg_; }
    const ImageStore& store() const noexcept { return store_; }
    fs::path file(std::string_view name) const { return root_ / name; }

    template <class T>
    std::shared_ptr<T> backend(Role role, std::string_view command) {
        auto it = cache_.find(role);
        if (it == cache_.end()) {
            auto spec = cfg_.backends.find(role);
            if (spec == cfg_.backends.end())
                throw ConfigError("[backends] has no '" + std::string(to_string(role)) + "' entry, which `appeal " +
                                  std::string(command) + "` needs");
            it = cache_.emplace(role, make_backend(role, spec->second)).first;
        }
        auto typed = std::dynamic_pointer_cast<T>(it->second);
        if (!typed) throw ConfigError("backend for role '" + std::string(to_string(role)) + "' has the wrong type");
        return typed;
    }

    json backend_json(Role role) const {
        auto it = cfg_.backends.find(role);
        return it == cfg_.backends.end() ? json(nullptr) : spec_json(it->second);
    }

    /// Upstream artifact; missing files name the command that produces them.
    fs::path require(std::string_view name, std::string_view producer, std::string_view stage) const {
        fs::path p = file(name);
        if (!fs::exists(p))
            throw StageError(std::string(stage), "missing " + p.string() + "; run `appeal " + std::string(producer) +
                                                     " --config " + cfg_.config_path.string() + "` first");
        return p;
    }

    /// True when the stage already ran with these inputs and its outputs exist.
    bool up_to_date(std::string_view stage, const json& inputs, std::initializer_list<std::string_view> outputs) const {
        if (force_) return false;
        const fs::path stamp = stamp_path(stage);
        if (!fs::exists(stamp)) return false;
        for (auto o : outputs)
            if (!fs::exists(file(o))) return false;
        try {
            return read_json(stamp).value("inputs", std::string()) == key_hash(inputs.dump());
        } catch (const std::exception&) {
            return false;
        }
    }

    void stamp(std::string_view stage, const json& inputs) const {
        fs::create_directories(root_ / "stamps");
        write_json_atomic(stamp_path(stage), json{{"stage", stage}, {"inputs", key_hash(inputs.dump())}});
    }

    std::vector<ImageRecord> records(std::string_view name, std::string_view producer, std::string_view stage) const {
        std::vector<ImageRecord> out;
        for (const auto& row : read_jsonl(require(name, producer, stage))) out.push_back(record_from_json(row));
        return out;
    }

    TrainConfig training(std::string_view name) const {
        TrainConfig t = cfg_.training;
        t.seed = stage_seed(cfg_, std::string(name) + "/train");
        t.checkpoint_dir = root_ / "checkpoints" / name;
        return t;
    }

private:
    fs::path stamp_path(std::string_view stage) const { return root_ / "stamps" / (std::string(stage) + ".json"); }

    RunConfig cfg_;
    fs::path root_;
    ImageStore store_;
    bool force_;
    std::map<Role, std::shared_ptr<Backend>> cache_;
};

std::vector<ImageRecord> kept_only(const std::vector<ImageRecord>& records) {
    std::vector<ImageRecord> kept;
    for (const auto& r : records)
        if (r.status == RecordStatus::kept) kept.push_back(r);
    return kept;
}

void report_skip(std::ostream& out, std::string_view stage) {
    out << stage << ": up to date (use --force to rerun)\n";
}

// --- stages ------------------------------------------------------------------

void run_queries(Workspace& ws, std::ostream& out) {
    const auto queries = generate_queries(ws.cfg().domain);
    write_jsonl_atomic(ws.file(kQueries), rows_of(queries));
    out << "queries: " << queries.size() << " -> " << ws.file(kQueries).string() << "\n";
}

void run_fetch(Workspace& ws, std::ostream& out) {
    const json inputs{{"queries", file_digest(ws.require(kQueries, "queries", "fetch"))},
                      {"top_k", ws.cfg().fetch.top_k},
                      {"output_size", ws.cfg().domain.output_size},
                      {"source", ws.backend_json(Role::image_source)},
                      {"upscaler", ws.backend_json(Role::upscaler)}};
    if (ws.up_to_date("fetch", inputs, {kFetch})) return report_skip(out, "fetch");

    std::vector<SearchQuery> queries;
    for (const auto& row : read_jsonl(ws.file(kQueries))) queries.push_back(query_from_json(row));
    auto source = ws.backend<ImageSource>(Role::image_source, "fetch");
    auto upscaler = ws.backend<Upscaler>(Role::upscaler, "fetch");
    FetchResult fetched = fetch_thumbnails(queries, *source, ws.cfg().fetch.top_k, ws.store(), "fetch");

    const auto n = static_cast<std::ptrdiff_t>(fetched.records.size());
    std::vector<std::optional<ImageRecord>> normalized(fetched.records.size());
    std::vector<std::string> errors(fetched.records.size());
    const bool parallel = upscaler->traits().reentrant;
#pragma omp parallel for schedule(dynamic) if (parallel)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        try {
            normalized[idx] = normalize_record(fetched.records[idx], ws.store(), *upscaler, ws.cfg().domain.output_size);
        } catch (const std::exception& e) {
            errors[idx] = std::string("decode error: ") + e.what();
        }
    }
    std::vector<ImageRecord> records;
    for (std::size_t i = 0; i < normalized.size(); ++i) {
        if (normalized[i]) {
            records.push_back(std::move(*normalized[i]));
        } else {
            const auto& r = fetched.records[i];
            spdlog::warn("dropping {}: {}", r.id, errors[i]);
            fetched.errors.push_back({r.query.text, r.source, r.rank, errors[i]});
        }
    }
    write_jsonl_atomic(ws.file(kFetchErrors), rows_of(fetched.errors));
    write_jsonl_atomic(ws.file(kFetch), rows_of(records));
    ws.stamp("fetch", inputs);
    out << "fetch: " << records.size() << " images, " << fetched.errors.size() << " errors, "
        << fetched.warnings.size() << " warnings\n";
}

void run_filter(Workspace& ws, std::ostream& out) {
    const auto& cfg = ws.cfg();
    const json inputs{{"fetch", file_digest(ws.require(kFetch, "fetch", "filter"))},
                      {"lexnames", cfg.domain.lexnames},
                      {"gamma", cfg.domain.gamma},
                      {"aggregate", to_string(cfg.aggregate)},
                      {"captioner", ws.backend_json(Role::captioner)},
                      {"segmenter", ws.backend_json(Role::segmenter)}};
    if (ws.up_to_date("filter", inputs, {kFilter})) return report_skip(out, "filter");

    auto records = ws.records(kFetch, "fetch", "filter");
    auto captioner = ws.backend<Captioner>(Role::captioner, "filter");
    auto segmenter = ws.backend<Segmenter>(Role::segmenter, "filter");
    const Lexicon& lexicon = Lexicon::shared();
    const bool parallel = captioner->traits().reentrant && segmenter->traits().reentrant;
    const auto n = static_cast<std::ptrdiff_t>(records.size());
    std::vector<std::string> errors(records.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        auto& r = records[static_cast<std::size_t>(i)];
        try {
            const Image image = ws.store().load(r.path);
            auto outcome = relevancy_filter(r, image, *captioner, *segmenter, lexicon, cfg.domain.lexnames,
                                            cfg.domain.gamma, cfg.aggregate);
            if (r.status == RecordStatus::kept) ws.store().save_field("relevancy", r.id, outcome.map);
        } catch (const std::exception& e) {
            errors[static_cast<std::size_t>(i)] = e.what();
        }
    }
    for (std::size_t i = 0; i < errors.size(); ++i)
        if (!errors[i].empty()) throw StageError("filter", records[i].id + ": " + errors[i]);
    records = balance_polarity(std::move(records));
    write_jsonl_atomic(ws.file(kFilter), rows_of(records));
    ws.stamp("filter", inputs);
    std::map<RecordStatus, int> counts;
    for (const auto& r : records) ++counts[r.status];
    out << "filter: kept " << counts[RecordStatus::kept] << ", caption " << counts[RecordStatus::filtered_caption]
        << ", area " << counts[RecordStatus::filtered_area] << ", balance " << counts[RecordStatus::dropped_balance]
        << "\n";
}

EmbeddingSet train_embeddings(Workspace& ws, const std::vector<ImageRecord>& kept) {
    const auto& cfg = ws.cfg();
    auto trainer = ws.backend<InversionTrainer>(Role::inversion_trainer, "synth");
    // Top-ranked search results are the most on-query exemplars.
    std::vector<const ImageRecord*> by_rank;
    for (const auto& r : kept) by_rank.push_back(&r);
    std::stable_sort(by_rank.begin(), by_rank.end(), [](auto* a, auto* b) { return a->rank < b->rank; });
    auto train_side = [&](Polarity p, std::optional<std::string> group) -> std::optional<PolarityEmbedding> {
        std::vector<Image> images;
        std::vector<std::string> ids;
        for (const ImageRecord* rp : by_rank) {
            const ImageRecord& r = *rp;
            if (r.query.polarity != p || (group && r.query.negative_group != group)) continue;
            images.push_back(ws.store().load(r.path));
            ids.push_back(r.id);
            if (static_cast<int>(ids.size()) == cfg.synthesis.embedding_exemplars) break;
        }
        if (ids.empty()) return std::nullopt;
        InversionParams params = cfg.synthesis.inversion;
        params.checkpoint_path = (ws.file("embeddings") / "checkpoints").string();
        return train_polarity_embedding(images, ids, p, group, *trainer, params);
    };
    EmbeddingSet set;
    auto pos = train_side(Polarity::positive, std::nullopt);
    if (!pos) throw StageError("synth", "no kept positive images to train the positive embedding");
    set.positive = std::move(*pos);
    save_embedding(set.positive, ws.file(kPositiveEmbedding));
    for (const auto& g : cfg.domain.negative_groups) {
        auto neg = train_side(Polarity::negative, g.name);
        if (!neg) {
            spdlog::warn("negative group '{}' has no kept images; it gets no embedding", g.name);
            continue;
        }
        save_embedding(*neg, ws.file("embeddings/negative-" + slugify(g.name) + ".bin"));
        set.negatives.emplace(g.name, std::move(*neg));
    }
    if (set.negatives.empty()) throw StageError("synth", "no negative group has kept images");
    return set;
}

void run_synth(Workspace& ws, std::ostream& out) {
    const auto& cfg = ws.cfg();
    json inpaint{{"mask_threshold", cfg.synthesis.inpaint.mask_threshold},
                 {"strength", cfg.synthesis.inpaint.strength},
                 {"guidance_scale", cfg.synthesis.inpaint.guidance_scale},
                 {"sampler", cfg.synthesis.inpaint.sampler}};
    const json inputs{{"filter", file_digest(ws.require(kFilter, "filter", "synth"))},
                      {"seed", cfg.seed},
                      {"bases", cfg.synthesis.bases},
                      {"embedding_exemplars", cfg.synthesis.embedding_exemplars},
                      {"inversion", {cfg.synthesis.inversion.steps, cfg.synthesis.inversion.learning_rate,
                                     cfg.synthesis.inversion.batch_size}},
                      {"inpaint", inpaint},
                      {"plan", {cfg.domain.synthesis_plan.backgrounds_per_base,
                                cfg.domain.synthesis_plan.alphas_per_background}},
                      {"inversion_trainer", ws.backend_json(Role::inversion_trainer)},
                      {"inpainter", ws.backend_json(Role::inpainter)}};
    if (ws.up_to_date("synth", inputs, {kSynthetic, kPositiveEmbedding})) return report_skip(out, "synth");

    const auto kept = kept_only(ws.records(kFilter, "filter", "synth"));
    if (kept.empty()) throw StageError("synth", "no kept images in " + ws.file(kFilter).string());
    const EmbeddingSet embeddings = train_embeddings(ws, kept);

    const ExemplarSet base_set =
        select_exemplars(kept, std::min<int>(cfg.synthesis.bases, static_cast<int>(kept.size())),
                         stage_seed(cfg, "bases"));
    write_json_atomic(ws.file(kBases), to_json(base_set));
    std::map<std::string, const ImageRecord*> by_id;
    for (const auto& r : kept) by_id[r.id] = &r;
    std::vector<SynthesisBase> bases;
    for (const auto& id : base_set.ids) {
        const ImageRecord* r = by_id.at(id);
        bases.push_back({id, r->caption.value_or(""), [&ws, r] {
                             return std::pair(ws.store().load(r->path),
                                              ws.store().load_field(ws.store().relative_path("relevancy", r->id)));
                         }});
    }

    SynthesisOptions opts;
    opts.run_seed = stage_seed(cfg, "synth");
    opts.inpaint = cfg.synthesis.inpaint;
    // Resume: samples whose image already exists are not regenerated.
    if (fs::exists(ws.file(kSynthetic))) {
        for (const auto& row : read_jsonl(ws.file(kSynthetic))) {
            auto s = sample_from_json(row);
            if (fs::exists(ws.store().absolute(s.path))) {
                opts.completed.insert(s.id);
                opts.previous.emplace(s.id, std::move(s));
            }
        }
    }
    auto inpainter = ws.backend<Inpainter>(Role::inpainter, "synth");
    const auto result = generate_synthetic_set(
        bases, cfg.domain.synthesis_plan, embeddings, *inpainter,
        [&ws](const SyntheticSample& s, const Image& img) { return ws.store().save("synthetic", s.id, img); }, opts);
    std::vector<json> failures;
    for (const auto& f : result.failures) failures.push_back({{"base_id", f.base_id}, {"message", f.message}});
    write_jsonl_atomic(ws.file(kSynthFailures), failures);
    if (result.samples.empty()) throw StageError("synth", "no synthetic samples were generated");
    write_jsonl_atomic(ws.file(kSynthetic), rows_of(result.samples));
    ws.stamp("synth", inputs);
    out << "synth: " << result.samples.size() << " samples from " << bases.size() << " bases ("
        << opts.completed.size() << " reused), " << result.failures.size() << " failed bases\n";
}

json training_inputs(const Workspace& ws, const std::vector<int>& hidden) {
    return {{"training", to_json(ws.cfg().training)},
            {"hidden", hidden},
            {"seed", ws.cfg().seed},
            {"encoder", ws.backend_json(Role::encoder)}};
}

void write_train_report(const fs::path& path, const TrainReport& report, const TrainConfig& cfg, std::size_t n) {
    fs::create_directories(path.parent_path());
    write_json_atomic(path, json{{"examples", n}, {"config", to_json(cfg)}, {"report", to_json(report)}});
}

void run_train_comparator(Workspace& ws, std::ostream& out) {
    const auto& cfg = ws.cfg();
    json inputs = training_inputs(ws, cfg.comparator_hidden);
    inputs["synthetic"] = file_digest(ws.require(kSynthetic, "synth", "train-comparator"));
    inputs["per_base"] = cfg.pairs_per_base;
    if (ws.up_to_date("train-comparator", inputs, {kPairs, kComparator})) return report_skip(out, "train-comparator");

    std::vector<SyntheticSample> samples;
    for (const auto& row : read_jsonl(ws.file(kSynthetic))) samples.push_back(sample_from_json(row));
    const auto pairs = make_pairs(samples, cfg.pairs_per_base, stage_seed(cfg, "pairs"));
    write_jsonl_atomic(ws.file(kPairs), rows_of(pairs));

    ComparatorModel model(ws.backend<ImageEncoder>(Role::encoder, "train-comparator"), cfg.comparator_hidden,
                          stage_seed(cfg, "comparator/head"));
    const TrainConfig training = ws.training("comparator");
    const TrainReport report = train_comparator(model, pairs, training, png_provider(cfg.workdir));
    fs::create_directories(ws.file("models"));
    save_model(model, ws.file(kComparator), json{{"pairs", pairs.size()}});
    write_train_report(ws.file("reports/comparator.json"), report, training, pairs.size());
    ws.stamp("train-comparator", inputs);
    out << "train-comparator: " << pairs.size() << " pairs, validation L1 "
        << (report.validation_loss ? std::to_string(*report.validation_loss) : std::string("n/a")) << "\n";
}

void run_label(Workspace& ws, std::ostream& out) {
    const auto& cfg = ws.cfg();
    const json inputs{{"filter", file_digest(ws.require(kFilter, "filter", "label"))},
                      {"comparator", file_digest(ws.require(kComparator, "train-comparator", "label"))},
                      {"exemplars", cfg.labeling.exemplars},
                      {"max_failure_rate", cfg.labeling.max_failure_rate},
                      {"seed", cfg.seed}};
    if (ws.up_to_date("label", inputs, {kLabels})) return report_skip(out, "label");

    const auto kept = kept_only(ws.records(kFilter, "filter", "label"));
    const ComparatorModel model =
        load_comparator(ws.file(kComparator), ws.backend<ImageEncoder>(Role::encoder, "label"));
    const ExemplarSet exemplars =
        select_exemplars(kept, std::min<int>(cfg.labeling.exemplars, static_cast<int>(kept.size())),
                         stage_seed(cfg, "exemplars"));
    write_json_atomic(ws.file(kExemplars), to_json(exemplars));
    std::map<std::string, std::string> path_of;
    for (const auto& r : kept) path_of[r.id] = r.path;
    const ExemplarBank bank =
        encode_exemplars(model, exemplars, [&](const std::string& id) { return ws.store().load(path_of.at(id)); });

    // A raw-score cache from another comparator or exemplar set is stale.
    const fs::path cache = ws.file(kRawScores);
    const fs::path cache_key = ws.file("raw_scores.key");
    const std::string key = key_hash(inputs.dump());
    if (fs::exists(cache) && (!fs::exists(cache_key) || read_json(cache_key).value("inputs", "") != key))
        fs::remove(cache);
    write_json_atomic(cache_key, json{{"inputs", key}});

    AnnotateOptions opts;
    opts.raw_cache = cache;
    opts.max_failure_rate = cfg.labeling.max_failure_rate;
    const AnnotateResult result =
        annotate_dataset(kept, bank, model, [&](const ImageRecord& r) { return ws.store().load(r.path); }, opts);
    std::vector<json> failures;
    for (const auto& [id, msg] : result.failures) failures.push_back({{"image_id", id}, {"message", msg}});
    write_jsonl_atomic(ws.file(kLabelFailures), failures);
    std::vector<json> rows;
    for (const auto& l : result.labels) {
        json row = to_json(l);
        row["path"] = path_of.at(l.image_id);
        rows.push_back(std::move(row));
    }
    write_jsonl_atomic(ws.file(kLabels), rows);
    ws.stamp("label", inputs);
    out << "label: " << result.labels.size() << " labels against " << exemplars.ids.size() << " exemplars, "
        << result.failures.size() << " failures\n";
}

void run_train_estimator(Workspace& ws, std::ostream& out) {
    const auto& cfg = ws.cfg();
    json inputs = training_inputs(ws, cfg.estimator_hidden);
    inputs["labels"] = file_digest(ws.require(kLabels, "label", "train-estimator"));
    if (ws.up_to_date("train-estimator", inputs, {kEstimator})) return report_skip(out, "train-estimator");

    std::vector<LabeledImage> labeled;
    for (const auto& row : read_jsonl(ws.file(kLabels)))
        labeled.push_back({row.at("path").get<std::string>(), row.at("scaled").get<double>()});
    EstimatorModel model(ws.backend<ImageEncoder>(Role::encoder, "train-estimator"), cfg.estimator_hidden,
                         stage_seed(cfg, "estimator/head"));
    const TrainConfig training = ws.training("estimator");
    const TrainReport report = train_estimator(model, labeled, training, png_provider(cfg.workdir));
    fs::create_directories(ws.file("models"));
    save_model(model, ws.file(kEstimator), json{{"labels", labeled.size()}});
    write_train_report(ws.file("reports/estimator.json"), report, training, labeled.size());
    ws.stamp("train-estimator", inputs);
    out << "train-estimator: " << labeled.size() << " images, validation MAE "
        << (report.validation_loss ? std::to_string(*report.validation_loss) : std::string("n/a")) << "\n";
}

EstimatorModel estimator_for(Workspace& ws, std::string_view command) {
    return load_estimator(ws.require(kEstimator, "train-estimator", command),
                          ws.backend<ImageEncoder>(Role::encoder, command));
}

void run_score(Workspace& ws, const std::vector<std::string>& images, std::ostream& out) {
    const EstimatorModel model = estimator_for(ws, "score");
    for (const auto& path : images) {
        const double s = model.predict(read_png(path));
        out << json{{"image", path}, {"score", s}}.dump() << "\n";
    }
}

ScalarField heatmap_for(const Image& image, const EstimatorModel& model, const HeatmapConfig& cfg) {
    return build_heatmap(image, patch_scores(image, cfg, model), cfg);
}

void run_heatmap(Workspace& ws, const std::vector<std::string>& images, const std::string& out_dir,
                 std::ostream& out) {
    const EstimatorModel model = estimator_for(ws, "heatmap");
    const fs::path dir = out_dir.empty() ? ws.file("heatmaps") : fs::path(out_dir);
    fs::create_directories(dir);
    for (const auto& path : images) {
        const Image image = read_png(path);
        const ScalarField heat = heatmap_for(image, model, ws.cfg().heatmap);
        const std::string stem = fs::path(path).stem().string();
        write_png_gray(dir / (stem + "_heatmap.png"), heat);
        write_png(dir / (stem + "_overlay.png"), heatmap_overlay(image, heat));
        out << json{{"image", path},
                    {"heatmap", (dir / (stem + "_heatmap.png")).string()},
                    {"overlay", (dir / (stem + "_overlay.png")).string()}}
                   .dump()
            << "\n";
    }
}

void run_enhance(Workspace& ws, const std::vector<std::string>& images, const std::string& out_dir,
                 std::ostream& out) {
    const auto& cfg = ws.cfg();
    const EstimatorModel model = estimator_for(ws, "enhance");
    const PolarityEmbedding z_pos = load_embedding(ws.require(kPositiveEmbedding, "synth", "enhance"));
    auto captioner = ws.backend<Captioner>(Role::captioner, "enhance");
    auto inpainter = ws.backend<Inpainter>(Role::inpainter, "enhance");
    std::shared_ptr<DepthEstimator> depth;
    if (cfg.enhance.depth_conditioning) {
        if (cfg.backends.count(Role::depth))
            depth = ws.backend<DepthEstimator>(Role::depth, "enhance");
        else
            spdlog::warn("depth conditioning is on but no depth backend is configured; continuing without depth");
    }
    for (const auto& path : images) {
        const Image image = read_png(path);
        const std::string object_type = object_type_from_caption(captioner->caption(image, content_hash(image)),
                                                                 cfg.domain.lexnames, Lexicon::shared());
        const ScalarField heat = heatmap_for(image, model, cfg.heatmap);
        std::optional<ScalarField> d = depth ? estimate_depth(image, *depth) : std::nullopt;
        const Image result = enhance(image, object_type, &z_pos, heat, d ? &*d : nullptr, cfg.enhance, *inpainter);
        const fs::path src(path);
        const fs::path dir = out_dir.empty() ? (src.has_parent_path() ? src.parent_path() : fs::path(".")) : fs::path(out_dir);
        fs::create_directories(dir);
        const fs::path png = dir / (src.stem().string() + "_enhanced.png");
        write_png(png, result);
        const double before = model.predict(image), after = model.predict(result);
        const json report{{"image", path},       {"enhanced", png.string()}, {"object_type", object_type},
                          {"score_before", before}, {"score_after", after},  {"delta", after - before},
                          {"depth", d.has_value()}};
        write_json_atomic(dir / (src.stem().string() + "_enhanced.json"), report);
        out << report.dump() << "\n";
    }
}

// --- eval-corr -----------------------------------------------------------------

std::string pick_field(const json& row, const std::string& requested, std::initializer_list<const char*> candidates,
                       const std::string& what) {
    if (!requested.empty()) {
        if (!row.contains(requested)) throw ValidationError(what, "rows have no field '" + requested + "'");
        return requested;
    }
    for (const char* c : candidates)
        if (row.contains(c)) return c;
    throw ValidationError(what, "cannot infer the field; pass it explicitly");
}

std::map<std::string, double> load_column(const std::string& path, std::string& key, const std::string& field,
                                          const std::string& what) {
    if (!fs::exists(path)) throw ValidationError(what, "file not found: " + path);
    const auto rows = read_jsonl(path);
    if (rows.empty()) throw ValidationError(what, "no rows in " + path);
    key = pick_field(rows.front(), key, {"image_id", "id", "image", "path"}, what + " key");
    const std::string value = pick_field(rows.front(), field, {"score", "scaled", "value", "alpha_truth"}, what + " field");
    std::map<std::string, double> out;
    for (const auto& row : rows) {
        if (!row.contains(key) || !row.contains(value) || !row[value].is_number())
            throw ValidationError(what, "row without '" + key + "' or numeric '" + value + "' in " + path);
        const std::string k = row[key].is_string() ? row[key].get<std::string>() : row[key].dump();
        if (!out.emplace(k, row[value].get<double>()).second)
            throw ValidationError(what, "duplicate key '" + k + "' in " + path);
    }
    return out;
}

struct EvalArgs {
    std::string pred, ref, key, pred_field, ref_field, out, label;
};

void run_eval_corr(const EvalArgs& a, std::ostream& out) {
    std::string pred_key = a.key, ref_key = a.key;
    const auto pred = load_column(a.pred, pred_key, a.pred_field, "--pred");
    const auto ref = load_column(a.ref, ref_key, a.ref_field, "--ref");
    std::vector<double> x, y;
    std::size_t unmatched = 0;
    for (const auto& [k, v] : pred) {
        auto it = ref.find(k);
        if (it == ref.end()) {
            ++unmatched;
            continue;
        }
        x.push_back(v);
        y.push_back(it->second);
    }
    if (unmatched) spdlog::warn("{} predictions have no reference row", unmatched);
    if (x.size() < 2) throw ValidationError("--pred/--ref", "fewer than two matching rows");
    MetricReport m;
    try {
        m = correlations(x, y);
    } catch (const std::domain_error& e) {
        throw ValidationError("--pred/--ref", e.what());
    }
    const std::string label = a.label.empty() ? fs::path(a.pred).stem().string() : a.label;
    json report = to_json(m);
    report["label"] = label;
    if (!a.out.empty()) write_json_atomic(a.out, report);
    out << report.dump() << "\n" << format_metric_table(m, label);
}

// --- toy harness -------------------------------------------------------------

struct ToyArgs {
    std::uint64_t seed = 7;
    int images = 500;
    std::optional<int> epochs;
    std::string out;
};

void run_toy(const ToyArgs& a, std::ostream& out) {
    ToyHarnessConfig cfg;
    cfg.seed = a.seed;
    cfg.images = a.images;
    cfg.epochs = a.epochs;
    if (!a.out.empty()) cfg.out_dir = a.out;
    const ToyHarnessResult r = toy_harness(cfg);
    out << r.report.dump() << "\n" << format_metric_table(r.metrics, "toy labels vs alpha");
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Content-appeal dataset builder, models and heatmap enhancement", "appeal"};
    app.require_subcommand(1, 1);
    app.fallthrough();
    app.failure_message(CLI::FailureMessage::help);

    std::string config_path;
    bool force = false, verbose = false, quiet = false;
    std::vector<std::string> images;
    std::string out_dir;
    EvalArgs eval;
    ToyArgs toy;
    std::function<void(Workspace&)> stage_action;
    std::function<void()> plain_action;
    bool needs_lock = true;  // score and enhance only read the workdir

    app.add_flag("-v,--verbose", verbose, "Debug logging");
    app.add_flag("-q,--quiet", quiet, "Warnings and errors only");

    auto stage = [&](const char* name, const char* help, auto fn) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("-c,--config", config_path, "Run config (TOML)")->required();
        sub->add_flag("--force", force, "Rerun even when outputs are up to date");
        sub->callback([&, fn] { stage_action = [&, fn](Workspace& ws) { fn(ws); }; });
        return sub;
    };
    stage("queries", "Write the adjective x noun search queries", [&](Workspace& ws) { run_queries(ws, out); });
    stage("fetch", "Retrieve, deduplicate and normalize thumbnails", [&](Workspace& ws) { run_fetch(ws, out); });
    stage("filter", "Caption screen, relevancy area filter, polarity balancing",
          [&](Workspace& ws) { run_filter(ws, out); });
    stage("synth", "Train polarity embeddings and generate the synthetic set",
          [&](Workspace& ws) { run_synth(ws, out); });
    stage("train-comparator", "Build pairs and train the relative comparator",
          [&](Workspace& ws) { run_train_comparator(ws, out); });
    stage("label", "Vote every kept image against the exemplars, scale to 1-10",
          [&](Workspace& ws) { run_label(ws, out); });
    stage("train-estimator", "Train the absolute estimator on the labels",
          [&](Workspace& ws) { run_train_estimator(ws, out); });
    for (const char* name : {"score", "heatmap", "enhance"}) {
        const std::string cmd = name;
        CLI::App* sub = stage(name,
                              cmd == "score"     ? "Estimator score per image"
                              : cmd == "heatmap" ? "Appeal heatmap and overlay PNGs per image"
                                                 : "Heatmap-gated enhancement with before/after scores",
                              [&, cmd](Workspace& ws) {
                                  if (cmd == "score") run_score(ws, images, out);
                                  if (cmd == "heatmap") run_heatmap(ws, images, out_dir, out);
                                  if (cmd == "enhance") run_enhance(ws, images, out_dir, out);
                              });
        sub->add_option("images", images, "PNG images")->required()->check(CLI::ExistingFile);
        if (cmd != "score") sub->add_option("-o,--out", out_dir, "Output directory");
        sub->parse_complete_callback([&, cmd] { needs_lock = cmd == "heatmap"; });
    }

    CLI::App* ev = app.add_subcommand("eval-corr", "PLCC/SRCC/KRCC/RMSE between two JSONL score files");
    ev->add_option("--pred", eval.pred, "Predictions JSONL")->required();
    ev->add_option("--ref", eval.ref, "Reference JSONL")->required();
    ev->add_option("--key", eval.key, "Join field (default: image_id, id, image or path)");
    ev->add_option("--pred-field", eval.pred_field, "Value field in --pred");
    ev->add_option("--ref-field", eval.ref_field, "Value field in --ref");
    ev->add_option("--label", eval.label, "Row label in the table");
    ev->add_option("-o,--out", eval.out, "Write the report JSON here");
    ev->callback([&] { plain_action = [&] { run_eval_corr(eval, out); }; });

    CLI::App* th = app.add_subcommand("toy-harness", "End-to-end run on a toy domain with known appeal");
    th->add_option("--seed", toy.seed, "Run seed")->capture_default_str();
    th->add_option("--images", toy.images, "Toy images")->capture_default_str();
    th->add_option("--epochs", toy.epochs, "Override every stage's epochs (0 = untrained control)");
    th->add_option("-o,--out", toy.out, "Write manifests and report here");
    th->callback([&] { plain_action = [&] { run_toy(toy, out); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "appeal: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
    auto logger = std::make_shared<spdlog::logger>("appeal", sink);
    logger->set_level(verbose ? spdlog::level::debug : quiet ? spdlog::level::warn : spdlog::level::info);
    logger->set_pattern("[%l] %v");
    auto previous = spdlog::default_logger();
    spdlog::set_default_logger(logger);
    struct Restore {
        std::shared_ptr<spdlog::logger> logger;
        ~Restore() { spdlog::set_default_logger(logger); }
    } restore{previous};

    try {
        if (plain_action) {
            plain_action();
        } else {
            Workspace ws(load_run_config(config_path), force);
            std::optional<WorkdirLock> lock;
            if (needs_lock) lock.emplace(ws.cfg().workdir / ".appeal.lock");
            stage_action(ws);
        }
        return kExitOk;
    } catch (const ConfigError& e) {
        err << "appeal: config error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const ValidationError& e) {
        err << "appeal: invalid input: " << e.what() << "\n";
        return kExitValidation;
    } catch (const StageError& e) {
        err << "appeal: stage failed: " << e.what() << "\n";
        return kExitStage;
    } catch (const std::exception& e) {
        err << "appeal: " << e.what() << "\n";
        return kExitStage;
    }
}

}  // namespace appeal::cli
