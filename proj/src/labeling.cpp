// Copyright 2026 The appeal authors
// SPDX-License-Identifier: Apache-2.0

#include "appeal/labeling.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <spdlog/spdlog.h>

#include "appeal/error.hpp"

namespace appeal {

json to_json(const ExemplarSet& e) {
    return json{{"ids", e.ids}, {"selection_seed", e.selection_seed}, {"strategy", e.strategy}};
}

ExemplarSet exemplars_from_json(const json& j) {
    return ExemplarSet{j.at("ids").get<std::vector<std::string>>(), j.at("selection_seed").get<std::uint64_t>(),
                       j.at("strategy").get<std::string>()};
}

ExemplarSet select_exemplars(std::span<const ImageRecord> records, int n, std::uint64_t seed) {
    std::vector<std::string> pos, neg;
    std::set<std::string> seen;
    for (const auto& r : records) {
        if (r.status != RecordStatus::kept || !seen.insert(r.id).second) continue;
        (r.query.polarity == Polarity::positive ? pos : neg).push_back(r.id);
    }
    if (n < 1) throw ValidationError("labeling.exemplars", "exemplar count must be >= 1");
    if (static_cast<std::size_t>(n) > pos.size() + neg.size())
        throw ValidationError("labeling.exemplars", "requested " + std::to_string(n) + " exemplars from " +
                                                        std::to_string(pos.size() + neg.size()) + " kept images");
    std::sort(pos.begin(), pos.end());
    std::sort(neg.begin(), neg.end());
    SplitMix(derive_seed(seed, "exemplars/positive")).shuffle(pos);
    SplitMix(derive_seed(seed, "exemplars/negative")).shuffle(neg);
    std::size_t want_pos = static_cast<std::size_t>(n - n / 2);
    std::size_t want_neg = static_cast<std::size_t>(n / 2);
    if (want_pos > pos.size()) {
        want_neg += want_pos - pos.size();
        want_pos = pos.size();
    }
    if (want_neg > neg.size()) {
        want_pos += want_neg - neg.size();
        want_neg = neg.size();
    }
    ExemplarSet out;
    out.selection_seed = seed;
    out.ids.assign(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(want_pos));
    out.ids.insert(out.ids.end(), neg.begin(), neg.begin() + static_cast<std::ptrdiff_t>(want_neg));
    return out;
}

json to_json(const AppealLabel& l) { return json{{"image_id", l.image_id}, {"raw", l.raw}, {"scaled", l.scaled}}; }

AppealLabel label_from_json(const json& j) {
    return AppealLabel{j.at("image_id").get<std::string>(), j.at("raw").get<double>(), j.at("scaled").get<double>()};
}

double vote_score(const Image& image, std::span<const Image> exemplars, const PairScorer& compare) {
    if (exemplars.empty()) throw ValidationError("exemplars", "exemplar set is empty");
    double sum = 0.0;
    for (const auto& v : exemplars) sum += compare(image, v);
    return sum / static_cast<double>(exemplars.size());
}

ExemplarBank encode_exemplars(const ComparatorModel& model, const ExemplarSet& set,
                              const std::function<Image(const std::string& id)>& load) {
    if (set.ids.empty()) throw ValidationError("exemplars", "exemplar set is empty");
    ExemplarBank bank{set.ids, Eigen::MatrixXd(model.encoder().dimension(), static_cast<Eigen::Index>(set.ids.size()))};
    const auto n = static_cast<Eigen::Index>(set.ids.size());
    std::vector<std::string> errors(set.ids.size());
#pragma omp parallel for schedule(dynamic)
    for (Eigen::Index i = 0; i < n; ++i) {
        try {
            bank.features.col(i) = model.branch(1).encode(load(set.ids[static_cast<std::size_t>(i)]));
        } catch (const std::exception& e) {
            errors[static_cast<std::size_t>(i)] = e.what();
        }
    }
    for (std::size_t i = 0; i < errors.size(); ++i)
        if (!errors[i].empty()) throw StageError("label", "exemplar " + set.ids[i] + " is unreadable: " + errors[i]);
    return bank;
}

double vote_score_features(const ComparatorModel& model, const ExemplarBank& bank, const Eigen::VectorXd& f) {
    const Eigen::Index d = f.size();
    const Eigen::Index v = bank.features.cols();
    if (v == 0) throw ValidationError("exemplars", "exemplar set is empty");
    Eigen::MatrixXd x(2 * d, v);
    x.topRows(d) = f.replicate(1, v);
    x.bottomRows(d) = bank.features;
    return model.head().forward(x).mean();
}

double vote_score(const ComparatorModel& model, const ExemplarBank& bank, const Image& image) {
    return vote_score_features(model, bank, model.branch(0).encode(image));
}

std::vector<AppealLabel> scale_scores(std::span<const std::pair<std::string, double>> raws) {
    std::vector<AppealLabel> out;
    if (raws.empty()) return out;
    double lo = raws.front().second, hi = raws.front().second;
    for (const auto& [_, r] : raws) {
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    out.reserve(raws.size());
    for (const auto& [id, r] : raws) {
        double scaled = 5.5;
        if (hi > lo) {
            scaled = r == hi ? 10.0 : 1.0 + 9.0 * (r - lo) / (hi - lo);
        }
        out.push_back({id, r, scaled});
    }
    return out;
}

AnnotateResult annotate_dataset(std::span<const ImageRecord> records, const ExemplarBank& bank,
                                const ComparatorModel& model,
                                const std::function<Image(const ImageRecord&)>& load,
                                const AnnotateOptions& opts) {
    std::map<std::string, double> cached;
    if (opts.raw_cache && std::filesystem::exists(*opts.raw_cache))
        for (const auto& row : read_jsonl(*opts.raw_cache)) cached[row.at("image_id").get<std::string>()] = row.at("raw").get<double>();

    std::optional<JsonlAppender> appender;
    if (opts.raw_cache) appender.emplace(*opts.raw_cache);

    const auto n = static_cast<std::ptrdiff_t>(records.size());
    std::vector<std::optional<double>> raws(records.size());
    std::vector<std::string> errors(records.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const ImageRecord& r = records[static_cast<std::size_t>(i)];
        if (auto it = cached.find(r.id); it != cached.end()) {
            raws[static_cast<std::size_t>(i)] = it->second;
            continue;
        }
        for (int attempt = 0; attempt <= opts.retries; ++attempt) {
            try {
                const double raw = vote_score(model, bank, load(r));
                raws[static_cast<std::size_t>(i)] = raw;
                if (appender) appender->append(json{{"image_id", r.id}, {"raw", raw}});
                break;
            } catch (const std::exception& e) {
                errors[static_cast<std::size_t>(i)] = e.what();
            }
        }
    }

    AnnotateResult result;
    std::vector<std::pair<std::string, double>> ok;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (raws[i]) {
            ok.emplace_back(records[i].id, *raws[i]);
        } else {
            spdlog::warn("label: {} failed: {}", records[i].id, errors[i]);
            result.failures.emplace_back(records[i].id, errors[i]);
        }
    }
    if (!records.empty() &&
        static_cast<double>(result.failures.size()) > opts.max_failure_rate * static_cast<double>(records.size()))
        throw StageError("label", std::to_string(result.failures.size()) + " of " + std::to_string(records.size()) +
                                      " images failed (limit " + std::to_string(opts.max_failure_rate * 100.0) + "%)");
    result.labels = scale_scores(ok);
    return result;
}

}  // namespace appeal
