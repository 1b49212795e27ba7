// Copyright 2026 The appeal authors
// SPDX-License-Identifier: Apache-2.0

#include "appeal/synthesis.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <mutex>

#include <spdlog/spdlog.h>

#include "appeal/error.hpp"

namespace appeal {

json embedding_metadata(const PolarityEmbedding& e) {
    return json{{"polarity", to_string(e.polarity)},
                {"group", e.group ? json(*e.group) : json(nullptr)},
                {"trained_on", e.trained_on},
                {"dimension", e.vector.size()}};
}

void save_embedding(const PolarityEmbedding& e, const std::filesystem::path& path) {
    static_assert(std::endian::native == std::endian::little, "checkpoint format is little-endian");
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out.write(reinterpret_cast<const char*>(e.vector.data()),
                  static_cast<std::streamsize>(e.vector.size() * sizeof(double)));
        if (!out) throw std::runtime_error("cannot write " + tmp);
    }
    std::filesystem::rename(tmp, path);
    write_json_atomic(path.string() + ".json", embedding_metadata(e));
}

PolarityEmbedding load_embedding(const std::filesystem::path& path) {
    const json meta = read_json(path.string() + ".json");
    PolarityEmbedding e;
    e.polarity = polarity_from_string(meta.at("polarity").get<std::string>());
    if (!meta.at("group").is_null()) e.group = meta.at("group").get<std::string>();
    e.trained_on = meta.at("trained_on").get<std::vector<std::string>>();
    const auto dim = meta.at("dimension").get<std::size_t>();
    e.vector.resize(dim);
    std::ifstream in(path, std::ios::binary);
    in.read(reinterpret_cast<char*>(e.vector.data()), static_cast<std::streamsize>(dim * sizeof(double)));
    if (!in) throw std::runtime_error("embedding checkpoint " + path.string() + " is truncated");
    return e;
}

PolarityEmbedding train_polarity_embedding(std::span<const Image> exemplars,
                                           std::span<const std::string> exemplar_ids, Polarity polarity,
                                           std::optional<std::string> group, InversionTrainer& trainer,
                                           const InversionParams& params) {
    if (exemplars.empty()) throw ValidationError("exemplars", "embedding training needs at least one exemplar");
    if (exemplars.size() != exemplar_ids.size())
        throw ValidationError("exemplar_ids", "one id per exemplar is required");
    PolarityEmbedding e;
    try {
        e.vector = trainer.train(exemplars, exemplar_ids, polarity, params);
    } catch (const BackendError& err) {
        std::string msg = err.what();
        if (!params.checkpoint_path.empty()) msg += " (partial state: " + params.checkpoint_path + ")";
        throw BackendError(msg, err.retryable());
    }
    if (e.vector.size() != trainer.dimension())
        throw BackendError(trainer.id() + " returned a vector of dimension " + std::to_string(e.vector.size()) +
                               ", expected " + std::to_string(trainer.dimension()),
                           false);
    e.polarity = polarity;
    e.group = std::move(group);
    e.trained_on.assign(exemplar_ids.begin(), exemplar_ids.end());
    return e;
}

std::vector<double> blend(std::span<const double> z_pos, std::span<const double> z_neg, double alpha) {
    if (z_pos.size() != z_neg.size())
        throw std::invalid_argument("blend: dimension mismatch (" + std::to_string(z_pos.size()) + " vs " +
                                    std::to_string(z_neg.size()) + ")");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("blend: alpha outside [0,1]");
    std::vector<double> out(z_pos.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = alpha * z_pos[i] + (1.0 - alpha) * z_neg[i];
    return out;
}

Conditioning blend(const PolarityEmbedding& z_pos, const PolarityEmbedding& z_neg, double alpha) {
    return Conditioning{blend(z_pos.vector, z_neg.vector, alpha)};
}

double sample_alpha(int k, double delta) {
    if (k < 0 || k > 2) throw std::invalid_argument("sample_alpha: k must be 0, 1 or 2");
    if (!(std::abs(delta) <= kMaxAlphaJitter)) throw std::invalid_argument("sample_alpha: |delta| > 0.2");
    return std::clamp(k / 2.0 + delta, 0.0, 1.0);
}

Image composite(const Image& original, const Image& generated, const ScalarField& binary_mask) {
    if (generated.width() != original.width() || generated.height() != original.height())
        throw BackendError("inpainter changed the image size", false);
    Image out = original;
    for (int y = 0; y < out.height(); ++y)
        for (int x = 0; x < out.width(); ++x)
            if (binary_mask.at(x, y) != 0.0) out.set(x, y, generated.pixel(x, y));
    return out;
}

namespace {

Image run_inpaint(const Image& image, const ScalarField& mask, std::string prompt,
                  std::optional<Conditioning> token, std::uint64_t seed, Inpainter& inpainter,
                  const InpaintOptions& opts) {
    if (mask.max() == 0.0) return image;
    InpaintRequest req{image, mask, std::move(prompt), std::move(token), {}, seed,
                       opts.strength, opts.guidance_scale, opts.sampler, nullptr};
    return composite(image, inpainter.inpaint(req), mask);
}

void check_shape(const Image& image, const ScalarField& relevancy) {
    if (!relevancy.same_shape(image))
        throw ValidationError("relevancy", "map " + std::to_string(relevancy.width()) + "x" +
                                               std::to_string(relevancy.height()) + " does not match image " +
                                               std::to_string(image.width()) + "x" +
                                               std::to_string(image.height()));
}

}  // namespace

Image diversify_background(const Image& image, const ScalarField& relevancy, std::uint64_t seed,
                           Inpainter& inpainter, const InpaintOptions& opts) {
    check_shape(image, relevancy);
    return run_inpaint(image, binarize(invert(relevancy), opts.mask_threshold), "", std::nullopt, seed,
                       inpainter, opts);
}

Image adjust_appeal(const Image& image, const std::string& caption, const Conditioning& cond,
                    const ScalarField& relevancy, std::uint64_t seed, Inpainter& inpainter,
                    const InpaintOptions& opts) {
    check_shape(image, relevancy);
    if (trim(caption).empty()) throw ValidationError("caption", "appeal adjustment needs a caption");
    return run_inpaint(image, binarize(relevancy, opts.mask_threshold),
                       caption + " " + std::string(kPlaceholderToken), cond, seed, inpainter, opts);
}

json to_json(const SyntheticSample& s) {
    return json{{"id", s.id},
                {"base_id", s.base_id},
                {"background", s.background},
                {"background_seed", s.background_seed},
                {"slot", s.slot},
                {"k", s.k},
                {"delta", s.delta},
                {"alpha", s.alpha},
                {"negative_group", s.negative_group},
                {"path", s.path}};
}

SyntheticSample sample_from_json(const json& j) {
    SyntheticSample s;
    s.id = j.at("id").get<std::string>();
    s.base_id = j.at("base_id").get<std::string>();
    s.background = j.at("background").get<int>();
    s.background_seed = j.at("background_seed").get<std::uint64_t>();
    s.slot = j.at("slot").get<int>();
    s.k = j.at("k").get<int>();
    s.delta = j.at("delta").get<double>();
    s.alpha = j.at("alpha").get<double>();
    s.negative_group = j.at("negative_group").get<std::string>();
    s.path = j.at("path").get<std::string>();
    return s;
}

std::vector<SyntheticSample> plan_base(const std::string& base_id, const SynthesisPlan& plan,
                                       std::span<const std::string> groups, std::uint64_t run_seed) {
    if (groups.empty()) throw ValidationError("negative_groups", "at least one negative embedding is required");
    SplitMix group_rng(derive_seed(run_seed, base_id + "/group"));
    const std::string& group = groups[group_rng.below(groups.size())];
    std::vector<SyntheticSample> out;
    out.reserve(static_cast<std::size_t>(plan.backgrounds_per_base * plan.alphas_per_background));
    for (int b = 0; b < plan.backgrounds_per_base; ++b) {
        const std::string bg_key = base_id + "/" + std::to_string(b);
        const std::uint64_t bg_seed = derive_seed(run_seed, bg_key + "/background");
        for (int slot = 0; slot < plan.alphas_per_background; ++slot) {
            const std::string key = bg_key + "/" + std::to_string(slot);
            SplitMix rng(derive_seed(run_seed, key + "/delta"));
            SyntheticSample s;
            s.id = key_hash(key);
            s.base_id = base_id;
            s.background = b;
            s.background_seed = bg_seed;
            s.slot = slot;
            s.k = slot % 3;
            s.delta = rng.uniform(-kMaxAlphaJitter, kMaxAlphaJitter);
            s.alpha = sample_alpha(s.k, s.delta);
            s.negative_group = group;
            out.push_back(std::move(s));
        }
    }
    return out;
}

SynthesisResult generate_synthetic_set(std::span<const SynthesisBase> bases, const SynthesisPlan& plan,
                                       const EmbeddingSet& embeddings, Inpainter& inpainter,
                                       const SampleSink& sink, const SynthesisOptions& opts) {
    std::vector<std::string> groups;
    for (const auto& [name, _] : embeddings.negatives) groups.push_back(name);

    std::vector<std::vector<SyntheticSample>> per_base(bases.size());
    std::vector<std::optional<std::string>> errors(bases.size());
    const bool parallel = inpainter.traits().reentrant;
    const auto n = static_cast<std::ptrdiff_t>(bases.size());

#pragma omp parallel for schedule(dynamic) if (parallel)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const SynthesisBase& base = bases[static_cast<std::size_t>(i)];
        auto planned = plan_base(base.id, plan, groups, opts.run_seed);
        const bool all_done = std::all_of(planned.begin(), planned.end(),
                                          [&](const SyntheticSample& s) { return opts.completed.count(s.id) != 0; });
        try {
            if (all_done) {
                for (auto& s : planned) {
                    if (auto it = opts.previous.find(s.id); it != opts.previous.end()) s.path = it->second.path;
                }
                per_base[static_cast<std::size_t>(i)] = std::move(planned);
                continue;
            }
            auto [image, relevancy] = base.load();
            const PolarityEmbedding& neg = embeddings.negatives.at(planned.front().negative_group);
            Image background;
            int current_bg = -1;
            for (auto& s : planned) {
                if (s.background != current_bg) {
                    background = diversify_background(image, relevancy, s.background_seed, inpainter, opts.inpaint);
                    current_bg = s.background;
                }
                if (opts.completed.count(s.id)) {
                    if (auto it = opts.previous.find(s.id); it != opts.previous.end()) s.path = it->second.path;
                    continue;
                }
                const Conditioning cond = blend(embeddings.positive, neg, s.alpha);
                const std::uint64_t seed = derive_seed(opts.run_seed, s.id + "/appeal");
                const Image out = adjust_appeal(background, base.caption, cond, relevancy, seed, inpainter, opts.inpaint);
                s.path = sink(s, out);
            }
            per_base[static_cast<std::size_t>(i)] = std::move(planned);
        } catch (const std::exception& e) {
            errors[static_cast<std::size_t>(i)] = e.what();
        }
    }

    SynthesisResult result;
    for (std::size_t i = 0; i < bases.size(); ++i) {
        if (errors[i]) {
            spdlog::warn("synthesis: base {} skipped: {}", bases[i].id, *errors[i]);
            result.failures.push_back({bases[i].id, *errors[i]});
            continue;
        }
        for (auto& s : per_base[i]) result.samples.push_back(std::move(s));
    }
    return result;
}

}  // namespace appeal
