// Copyright 2026 The appeal authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include <spdlog/spdlog.h>

#include "appeal/error.hpp"
#include "appeal/eval.hpp"
#include "appeal/labeling.hpp"
#include "appeal/mocks.hpp"
#include "appeal/relevancy.hpp"

namespace appeal {

namespace {

constexpr const char* kToyCaption = "a plate of food on a table";

template <class F>
auto stage(const char* name, F&& f) {
    spdlog::info("toy-harness: {}", name);
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

std::vector<json> rows_of(const auto& items) {
    std::vector<json> rows;
    rows.reserve(items.size());
    for (const auto& i : items) rows.push_back(to_json(i));
    return rows;
}

}  // namespace

ToyHarnessResult toy_harness(const ToyHarnessConfig& cfg) {
    if (cfg.images < 4 || cfg.bases < 1 || cfg.exemplars < 2)
        throw ValidationError("toy_harness", "need >= 4 images, >= 1 base and >= 2 exemplars");
    TrainConfig training = cfg.training;
    training.seed = derive_seed(cfg.seed, "train");
    if (cfg.epochs)
        for (auto& s : training.stages) s.epochs = *cfg.epochs;

    // Toy "real" corpus with known alpha; polarity follows alpha.
    std::map<std::string, Image> images;
    std::vector<ImageRecord> records;
    std::map<std::string, double> truth;
    {
        SplitMix alpha_rng(derive_seed(cfg.seed, "alpha"));
        for (int i = 0; i < cfg.images; ++i) {
            const double alpha = alpha_rng.uniform();
            Image image = mock::toy_scene(cfg.image_size, alpha, derive_seed(cfg.seed, "toy/" + std::to_string(i)));
            ImageRecord r;
            r.id = content_hash(image);
            if (images.count(r.id)) continue;
            r.source = "toy";
            const bool positive = alpha >= 0.5;
            r.query = SearchQuery{positive ? "delicious food" : "bland food",
                                  positive ? Polarity::positive : Polarity::negative,
                                  positive ? std::nullopt : std::optional<std::string>("bland")};
            r.rank = i + 1;
            r.path = "real/" + r.id + ".png";
            r.width = r.height = cfg.image_size;
            truth[r.id] = alpha;
            images.emplace(r.path, std::move(image));
            records.push_back(std::move(r));
        }
    }
    auto image_of = [&](const std::string& path) -> const Image& { return images.at(path); };

    // Caption screen + relevancy area filter + balancing.
    const Lexicon& lexicon = Lexicon::shared();
    mock::MockCaptioner captioner({}, std::string(kToyCaption));
    mock::MockSegmenter segmenter;
    const std::vector<std::string> lexnames{"noun.food"};
    std::map<std::string, ScalarField> relevancy;
    stage("filter", [&] {
        for (auto& r : records) {
            auto out = relevancy_filter(r, image_of(r.path), captioner, segmenter, lexicon, lexnames, cfg.gamma);
            if (r.status == RecordStatus::kept) relevancy.emplace(r.id, std::move(out.map));
        }
        records = balance_polarity(std::move(records));
        return 0;
    });
    std::vector<ImageRecord> kept;
    for (const auto& r : records)
        if (r.status == RecordStatus::kept) kept.push_back(r);

    // Polarity embeddings from the top-ranked exemplars of each side.
    mock::MockInversionTrainer inversion;
    EmbeddingSet embeddings = stage("embed", [&] {
        EmbeddingSet set;
        for (Polarity p : {Polarity::positive, Polarity::negative}) {
            std::vector<Image> ex;
            std::vector<std::string> ids;
            for (const auto& r : kept) {
                if (r.query.polarity != p) continue;
                ex.push_back(image_of(r.path));
                ids.push_back(r.id);
                if (static_cast<int>(ids.size()) == cfg.embedding_exemplars) break;
            }
            auto e = train_polarity_embedding(ex, ids, p, p == Polarity::negative ? std::optional<std::string>("bland")
                                                                                  : std::nullopt,
                                              inversion);
            if (p == Polarity::positive)
                set.positive = std::move(e);
            else
                set.negatives.emplace("bland", std::move(e));
        }
        return set;
    });

    // Synthesis over a balanced subset of bases.
    mock::MockInpainter inpainter(mock::MockInpainter::Mode::toy);
    std::mutex mu;
    std::map<std::string, Image> synthetic;
    const ExemplarSet base_set = stage("synth", [&] {
        return select_exemplars(kept, std::min<int>(cfg.bases, static_cast<int>(kept.size())),
                                derive_seed(cfg.seed, "bases"));
    });
    std::map<std::string, const ImageRecord*> by_id;
    for (const auto& r : kept) by_id[r.id] = &r;
    std::vector<SynthesisBase> bases;
    for (const auto& id : base_set.ids) {
        const ImageRecord* r = by_id.at(id);
        bases.push_back({id, *r->caption, [&, r] { return std::pair(image_of(r->path), relevancy.at(r->id)); }});
    }
    SynthesisOptions sopts;
    sopts.run_seed = derive_seed(cfg.seed, "synth");
    const SynthesisResult synth = stage("synth", [&] {
        auto res = generate_synthetic_set(bases, cfg.plan, embeddings, inpainter,
                                          [&](const SyntheticSample& s, const Image& img) {
                                              std::string path = "synthetic/" + s.id + ".png";
                                              std::lock_guard lock(mu);
                                              synthetic.emplace(path, img);
                                              return path;
                                          },
                                          sopts);
        if (!res.failures.empty()) throw StageError("synth", res.failures.front().message);
        return res;
    });

    const auto pairs = stage("pairs", [&] { return make_pairs(synth.samples, cfg.pairs_per_base, derive_seed(cfg.seed, "pairs")); });

    ComparatorModel model(std::make_shared<mock::MockEncoder>(), kComparatorHidden, derive_seed(cfg.seed, "head"));
    const ImageProvider provider = [&](const std::string& path) { return synthetic.at(path); };
    TrainReport report = stage("train-comparator", [&] { return train_comparator(model, pairs, training, provider); });

    // Voting over the whole toy corpus.
    const ExemplarSet ex = stage("label", [&] {
        return select_exemplars(kept, std::min<int>(cfg.exemplars, static_cast<int>(kept.size())),
                                derive_seed(cfg.seed, "exemplars"));
    });
    std::vector<ImageRecord> all_real;
    for (const auto& r : records) all_real.push_back(r);
    const AnnotateResult labels = stage("label", [&] {
        const ExemplarBank bank =
            encode_exemplars(model, ex, [&](const std::string& id) { return image_of(by_id.at(id)->path); });
        return annotate_dataset(all_real, bank, model, [&](const ImageRecord& r) { return image_of(r.path); });
    });

    ToyHarnessResult result;
    for (const auto& l : labels.labels) {
        result.labels.push_back(l.scaled);
        result.alpha_truth.push_back(truth.at(l.image_id));
    }
    result.metrics = stage("eval", [&] { return correlations(result.labels, result.alpha_truth); });
    result.training = std::move(report);
    result.synthetic_samples = synth.samples.size();
    result.pairs = pairs.size();
    result.kept = kept.size();
    result.report = json{{"seed", cfg.seed},
                         {"images", records.size()},
                         {"kept", kept.size()},
                         {"bases", bases.size()},
                         {"synthetic_samples", synth.samples.size()},
                         {"pairs", pairs.size()},
                         {"exemplars", ex.ids.size()},
                         {"training", to_json(training)},
                         {"loss", to_json(result.training)},
                         {"metrics", to_json(result.metrics)}};

    if (cfg.out_dir) {
        const auto& dir = *cfg.out_dir;
        std::filesystem::create_directories(dir);
        write_jsonl_atomic(dir / "records.jsonl", rows_of(records));
        write_jsonl_atomic(dir / "synthetic.jsonl", rows_of(synth.samples));
        write_jsonl_atomic(dir / "pairs.jsonl", rows_of(pairs));
        write_json_atomic(dir / "exemplars.json", to_json(ex));
        std::vector<json> rows;
        for (const auto& l : labels.labels) {
            json row = to_json(l);
            row["alpha_truth"] = truth.at(l.image_id);
            rows.push_back(std::move(row));
        }
        write_jsonl_atomic(dir / "labels.jsonl", rows);
        write_json_atomic(dir / "report.json", result.report);
    }
    return result;
}

}  // namespace appeal
