// Copyright 2026 The appeal authors
// SPDX-License-Identifier: Apache-2.0

#include "appeal/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

#include <spdlog/spdlog.h>

#include "appeal/error.hpp"

namespace appeal {

// --- Mlp ---------------------------------------------------------------------

Mlp::Mlp(std::vector<int> widths, std::uint64_t seed, bool zero_last) : widths_(std::move(widths)) {
    if (widths_.size() < 2) throw std::invalid_argument("Mlp needs at least input and output widths");
    SplitMix rng(seed);
    for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
        const int in = widths_[l], out = widths_[l + 1];
        if (in <= 0 || out <= 0) throw std::invalid_argument("Mlp widths must be positive");
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        Layer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd(out)};
        for (Eigen::Index j = 0; j < layer.weight.cols(); ++j)
            for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) layer.weight(i, j) = rng.uniform(-bound, bound);
        for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = rng.uniform(-bound, bound);
        layers_.push_back(std::move(layer));
    }
    if (zero_last) {
        layers_.back().weight.setZero();
        layers_.back().bias.setZero();
    }
}

std::size_t Mlp::parameter_count() const noexcept {
    std::size_t n = 0;
    for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x, Tape* tape) const {
    if (x.rows() != widths_.front())
        throw std::invalid_argument("Mlp input has " + std::to_string(x.rows()) + " rows, expected " +
                                    std::to_string(widths_.front()));
    if (tape) tape->inputs.clear();
    Eigen::MatrixXd a = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        Eigen::MatrixXd z = layers_[l].weight * a;
        z.colwise() += layers_[l].bias;
        if (tape) tape->inputs.push_back(std::move(a));
        a = l + 1 < layers_.size() ? Eigen::MatrixXd(z.cwiseMax(0.0)) : std::move(z);
    }
    return a;
}

Eigen::MatrixXd Mlp::backward(const Tape& tape, const Eigen::MatrixXd& dy, std::vector<Layer>& grads) const {
    grads.resize(layers_.size());
    Eigen::MatrixXd g = dy;
    for (std::size_t l = layers_.size(); l-- > 0;) {
        const Eigen::MatrixXd& in = tape.inputs[l];
        grads[l].weight = g * in.transpose();
        grads[l].bias = g.rowwise().sum();
        g = layers_[l].weight.transpose() * g;
        if (l > 0) g = g.cwiseProduct((in.array() > 0.0).cast<double>().matrix());
    }
    return g;
}

// --- AdamW -------------------------------------------------------------------

void AdamW::step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads) {
    if (params.size() != grads.size()) throw std::invalid_argument("AdamW: parameter/gradient count mismatch");
    if (m_.empty()) {
        for (const auto& p : params) {
            m_.emplace_back(p.size(), 0.0);
            v_.emplace_back(p.size(), 0.0);
        }
    }
    ++t_;
    const double c1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
    const double decay = 1.0 - lr_ * opts_.weight_decay;
    for (std::size_t k = 0; k < params.size(); ++k) {
        const auto n = static_cast<Eigen::Index>(params[k].size());
        Eigen::Map<Eigen::ArrayXd> p(params[k].data(), n);
        Eigen::Map<const Eigen::ArrayXd> g(grads[k].data(), n);
        Eigen::Map<Eigen::ArrayXd> m(m_[k].data(), n);
        Eigen::Map<Eigen::ArrayXd> v(v_[k].data(), n);
        m = opts_.beta1 * m + (1.0 - opts_.beta1) * g;
        v = opts_.beta2 * v + (1.0 - opts_.beta2) * g.square();
        p = p * decay - lr_ * (m / c1) / ((v / c2).sqrt() + opts_.eps);
    }
}

// --- config ------------------------------------------------------------------

void TrainConfig::validate() const {
    if (stages.empty()) throw ValidationError("training.stages", "at least one stage is required");
    for (std::size_t i = 0; i < stages.size(); ++i) {
        const auto& s = stages[i];
        const std::string f = "training.stages[" + std::to_string(i) + "]";
        if (!(s.learning_rate > 0.0)) throw ValidationError(f + ".learning_rate", "must be > 0");
        if (s.epochs < 0) throw ValidationError(f + ".epochs", "must be >= 0");
        if (s.batch_size < 1) throw ValidationError(f + ".batch_size", "must be >= 1");
    }
    if (optimizer != "adamw") throw ValidationError("training.optimizer", "only 'adamw' is supported");
    if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
        throw ValidationError("training.validation_fraction", "must be in [0,1)");
}

json to_json(const TrainStage& s) {
    return json{{"freeze_encoder", s.freeze_encoder},
                {"epochs", s.epochs},
                {"learning_rate", s.learning_rate},
                {"batch_size", s.batch_size}};
}

json to_json(const TrainConfig& c) {
    json stages = json::array();
    for (const auto& s : c.stages) stages.push_back(to_json(s));
    return json{{"stages", stages},
                {"optimizer", c.optimizer},
                {"weight_decay", c.adamw.weight_decay},
                {"seed", c.seed},
                {"validation_fraction", c.validation_fraction}};
}

// --- pairs -------------------------------------------------------------------

json to_json(const PairExample& p) {
    return json{{"image_a_path", p.image_a_path}, {"image_b_path", p.image_b_path}, {"target", p.target},
                {"base_id", p.base_id},           {"sample_a", p.sample_a},         {"sample_b", p.sample_b}};
}

PairExample pair_from_json(const json& j) {
    return PairExample{j.at("image_a_path").get<std::string>(), j.at("image_b_path").get<std::string>(),
                       j.at("target").get<double>(),          j.at("base_id").get<std::string>(),
                       j.at("sample_a").get<std::string>(),   j.at("sample_b").get<std::string>()};
}

std::vector<PairExample> make_pairs(std::span<const SyntheticSample> samples, int per_base_pairs,
                                    std::uint64_t seed) {
    if (per_base_pairs < 1) throw ValidationError("pairs.per_base", "must be >= 1");
    std::vector<std::string> order;
    std::map<std::string, std::vector<const SyntheticSample*>> by_base;
    for (const auto& s : samples) {
        auto [it, inserted] = by_base.try_emplace(s.base_id);
        if (inserted) order.push_back(s.base_id);
        it->second.push_back(&s);
    }
    std::vector<PairExample> out;
    for (const auto& base : order) {
        const auto& group = by_base[base];
        if (group.size() < 2) {
            spdlog::warn("make_pairs: base {} has {} sample(s), skipped", base, group.size());
            continue;
        }
        std::vector<std::pair<std::size_t, std::size_t>> all;
        for (std::size_t i = 0; i < group.size(); ++i)
            for (std::size_t j = i + 1; j < group.size(); ++j) all.emplace_back(i, j);
        SplitMix rng(derive_seed(seed, "pairs/" + base));
        rng.shuffle(all);
        const std::size_t n = std::min(all.size(), static_cast<std::size_t>(per_base_pairs));
        for (std::size_t p = 0; p < n; ++p) {
            const SyntheticSample* a = group[all[p].first];
            const SyntheticSample* b = group[all[p].second];
            if (rng.below(2) == 1) std::swap(a, b);
            out.push_back({a->path, b->path, a->alpha - b->alpha, base, a->id, b->id});
            out.push_back({b->path, a->path, b->alpha - a->alpha, base, b->id, a->id});
        }
    }
    return out;
}

ImageProvider png_provider(std::filesystem::path root) {
    return [root = std::move(root)](const std::string& path) { return read_png(root.empty() ? std::filesystem::path(path) : root / path); };
}

// --- models ------------------------------------------------------------------

namespace {

std::vector<int> head_widths(int input, const std::vector<int>& hidden) {
    std::vector<int> w{input};
    w.insert(w.end(), hidden.begin(), hidden.end());
    w.push_back(1);
    return w;
}

std::shared_ptr<ImageEncoder> require(std::shared_ptr<ImageEncoder> e) {
    if (!e) throw std::invalid_argument("model needs an encoder");
    return e->clone();
}

}  // namespace

ComparatorModel::ComparatorModel(std::shared_ptr<ImageEncoder> encoder, std::vector<int> hidden,
                                 std::uint64_t seed, bool zero_head)
    : encoder_(require(std::move(encoder))),
      hidden_(std::move(hidden)),
      head_(head_widths(2 * encoder_->dimension(), hidden_), seed, zero_head) {}

ImageEncoder& ComparatorModel::branch(int i) const {
    if (i != 0 && i != 1) throw std::out_of_range("comparator has branches 0 and 1");
    return *encoder_;
}

double ComparatorModel::predict_features(const Eigen::VectorXd& fa, const Eigen::VectorXd& fb) const {
    Eigen::MatrixXd x(fa.size() + fb.size(), 1);
    x << fa, fb;
    return head_.forward(x)(0, 0);
}

double ComparatorModel::predict(const Image& a, const Image& b) const {
    return predict_features(branch(0).encode(a), branch(1).encode(b));
}

double comparator_predict(const ComparatorModel& model, const Image& a, const Image& b) {
    return model.predict(a, b);
}

EstimatorModel::EstimatorModel(std::shared_ptr<ImageEncoder> encoder, std::vector<int> hidden,
                               std::uint64_t seed, bool zero_head)
    : encoder_(require(std::move(encoder))),
      hidden_(std::move(hidden)),
      head_(head_widths(encoder_->dimension(), hidden_), seed, zero_head) {}

double EstimatorModel::predict_features(const Eigen::VectorXd& f) const {
    return head_.forward(Eigen::MatrixXd(f))(0, 0);
}

double EstimatorModel::predict(const Image& image) const { return predict_features(encoder_->encode(image)); }

std::vector<double> EstimatorModel::predict_batch(std::span<const Image> images) const {
    const auto n = static_cast<Eigen::Index>(images.size());
    Eigen::MatrixXd f(encoder_->dimension(), n);
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < n; ++i) f.col(i) = encoder_->encode(images[static_cast<std::size_t>(i)]);
    const Eigen::MatrixXd y = head_.forward(f);
    return std::vector<double>(y.data(), y.data() + y.size());
}

// --- training ----------------------------------------------------------------

std::vector<double> TrainReport::loss_trace() const {
    std::vector<double> out;
    for (const auto& s : stages) out.insert(out.end(), s.epoch_loss.begin(), s.epoch_loss.end());
    return out;
}

json to_json(const TrainReport& r) {
    json stages = json::array();
    for (const auto& s : r.stages) {
        stages.push_back(json{{"stage", to_json(s.stage)},
                              {"epoch_loss", s.epoch_loss},
                              {"validation_loss", s.validation_loss ? json(*s.validation_loss) : json(nullptr)},
                              {"encoder_updated", s.encoder_updated},
                              {"checkpoint", s.checkpoint ? json(*s.checkpoint) : json(nullptr)}});
    }
    return json{{"stages", stages},
                {"train_size", r.train_size},
                {"validation_size", r.validation_size},
                {"validation_loss", r.validation_loss ? json(*r.validation_loss) : json(nullptr)}};
}

namespace {

// Examples reference `arity` images each (2 for pairs, 1 for single images);
// the head sees their stacked features.
struct Example {
    std::array<std::size_t, 2> images{};
    double target = 0.0;
    std::string group;
};

class Trainer {
public:
    Trainer(Mlp& head, ImageEncoder& encoder, int arity, std::vector<std::string> paths,
            std::vector<Example> examples, const ImageProvider& provider)
        : head_(head),
          encoder_(encoder),
          trainable_(encoder.trainable()),
          arity_(arity),
          paths_(std::move(paths)),
          examples_(std::move(examples)),
          provider_(provider) {}

    TrainReport run(const TrainConfig& cfg, const std::function<std::string(std::size_t)>& checkpoint) {
        split(cfg);
        TrainReport report;
        report.train_size = train_.size();
        report.validation_size = val_.size();
        for (std::size_t s = 0; s < cfg.stages.size(); ++s) {
            const TrainStage& stage = cfg.stages[s];
            StageReport sr{stage, {}, std::nullopt, false, std::nullopt};
            const bool update_encoder = !stage.freeze_encoder && trainable_ != nullptr;
            if (!stage.freeze_encoder && !trainable_)
                spdlog::warn("encoder {} exposes no trainable weights; stage {} keeps it frozen", encoder_.id(), s + 1);
            prepare(update_encoder);
            AdamW opt(stage.learning_rate, cfg.adamw);
            for (int epoch = 0; epoch < stage.epochs; ++epoch) {
                std::vector<std::size_t> order = train_;
                SplitMix rng(derive_seed(cfg.seed, "stage" + std::to_string(s) + "/epoch" + std::to_string(epoch)));
                rng.shuffle(order);
                double total = 0.0;
                for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(stage.batch_size)) {
                    const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(stage.batch_size));
                    std::span<const std::size_t> batch(order.data() + start, end - start);
                    const double loss = step(batch, update_encoder, &opt);
                    if (!std::isfinite(loss))
                        throw TrainingError("non-finite loss at stage " + std::to_string(s + 1) + ", epoch " +
                                            std::to_string(epoch + 1) + ", batch starting at " +
                                            std::to_string(start) + " (lr " + std::to_string(stage.learning_rate) +
                                            ")");
                    total += loss * static_cast<double>(batch.size());
                }
                const double mean = order.empty() ? 0.0 : total / static_cast<double>(order.size());
                sr.epoch_loss.push_back(mean);
                spdlog::debug("stage {} epoch {}: loss {:.6f}", s + 1, epoch + 1, mean);
            }
            sr.encoder_updated = update_encoder && stage.epochs > 0;
            if (!val_.empty()) {
                prepare(false);
                sr.validation_loss = evaluate(val_);
                report.validation_loss = sr.validation_loss;
            }
            if (checkpoint) sr.checkpoint = checkpoint(s);
            report.stages.push_back(std::move(sr));
        }
        return report;
    }

    double evaluate(std::span<const std::size_t> idx) {
        double total = 0.0;
        for (std::size_t start = 0; start < idx.size(); start += 256) {
            const std::size_t end = std::min(idx.size(), start + 256);
            total += step(idx.subspan(start, end - start), false, nullptr) * static_cast<double>(end - start);
        }
        return idx.empty() ? 0.0 : total / static_cast<double>(idx.size());
    }

private:
    void split(const TrainConfig& cfg) {
        std::set<std::string> unique;
        for (const auto& e : examples_) unique.insert(e.group);
        std::vector<std::string> groups(unique.begin(), unique.end());
        SplitMix rng(derive_seed(cfg.seed, "split"));
        rng.shuffle(groups);
        std::size_t n_val = 0;
        if (cfg.validation_fraction > 0.0 && groups.size() >= 2)
            n_val = std::max<std::size_t>(1, static_cast<std::size_t>(cfg.validation_fraction * static_cast<double>(groups.size())));
        const std::set<std::string> val_groups(groups.begin(), groups.begin() + static_cast<std::ptrdiff_t>(n_val));
        for (std::size_t i = 0; i < examples_.size(); ++i)
            (val_groups.count(examples_[i].group) ? val_ : train_).push_back(i);
    }

    // Frozen: cache features. Trainable: cache encoder inputs, features are W * x.
    void prepare(bool update_encoder) {
        const auto n = static_cast<Eigen::Index>(paths_.size());
        if (trainable_) {
            if (inputs_.cols() != n) {
                inputs_.resize(trainable_->input_dimension(), n);
#pragma omp parallel for schedule(dynamic)
                for (Eigen::Index i = 0; i < n; ++i)
                    inputs_.col(i) = trainable_->preprocess(provider_(paths_[static_cast<std::size_t>(i)]));
            }
            if (!update_encoder) features_ = trainable_->weights() * inputs_;
            return;
        }
        if (features_.cols() != n) {
            features_.resize(encoder_.dimension(), n);
#pragma omp parallel for schedule(dynamic)
            for (Eigen::Index i = 0; i < n; ++i)
                features_.col(i) = encoder_.encode(provider_(paths_[static_cast<std::size_t>(i)]));
        }
    }

    double step(std::span<const std::size_t> batch, bool update_encoder, AdamW* opt) {
        const Eigen::Index d = encoder_.dimension();
        const auto b = static_cast<Eigen::Index>(batch.size());
        Eigen::MatrixXd x(d * arity_, b);
        Eigen::RowVectorXd target(b);
        std::vector<Eigen::MatrixXd> raw(static_cast<std::size_t>(arity_));
        if (update_encoder)
            for (auto& r : raw) r.resize(inputs_.rows(), b);
        for (Eigen::Index j = 0; j < b; ++j) {
            const Example& e = examples_[batch[static_cast<std::size_t>(j)]];
            target(j) = e.target;
            for (int a = 0; a < arity_; ++a) {
                const auto col = static_cast<Eigen::Index>(e.images[static_cast<std::size_t>(a)]);
                if (update_encoder)
                    raw[static_cast<std::size_t>(a)].col(j) = inputs_.col(col);
                else
                    x.block(a * d, j, d, 1) = features_.col(col);
            }
        }
        if (update_encoder)
            for (int a = 0; a < arity_; ++a) x.middleRows(a * d, d) = trainable_->weights() * raw[static_cast<std::size_t>(a)];

        Mlp::Tape tape;
        const Eigen::MatrixXd y = head_.forward(x, opt ? &tape : nullptr);
        const Eigen::RowVectorXd diff = y.row(0) - target;
        const double loss = diff.cwiseAbs().mean();
        if (!opt || !std::isfinite(loss)) return loss;

        Eigen::MatrixXd dy(1, b);
        for (Eigen::Index j = 0; j < b; ++j)
            dy(0, j) = (diff(j) > 0.0 ? 1.0 : diff(j) < 0.0 ? -1.0 : 0.0) / static_cast<double>(b);
        std::vector<Mlp::Layer> grads;
        const Eigen::MatrixXd dx = head_.backward(tape, dy, grads);

        std::vector<std::span<double>> params;
        std::vector<std::span<const double>> gspans;
        for (std::size_t l = 0; l < grads.size(); ++l) {
            auto& layer = head_.layers()[l];
            params.emplace_back(layer.weight.data(), static_cast<std::size_t>(layer.weight.size()));
            gspans.emplace_back(grads[l].weight.data(), static_cast<std::size_t>(grads[l].weight.size()));
            params.emplace_back(layer.bias.data(), static_cast<std::size_t>(layer.bias.size()));
            gspans.emplace_back(grads[l].bias.data(), static_cast<std::size_t>(grads[l].bias.size()));
        }
        Eigen::MatrixXd dw;
        if (update_encoder) {
            // Both branches share W, so their gradients add.
            dw = Eigen::MatrixXd::Zero(trainable_->weights().rows(), trainable_->weights().cols());
            for (int a = 0; a < arity_; ++a) dw.noalias() += dx.middleRows(a * d, d) * raw[static_cast<std::size_t>(a)].transpose();
            auto& w = trainable_->weights();
            params.emplace_back(w.data(), static_cast<std::size_t>(w.size()));
            gspans.emplace_back(dw.data(), static_cast<std::size_t>(dw.size()));
        }
        opt->step(params, gspans);
        return loss;
    }

    Mlp& head_;
    ImageEncoder& encoder_;
    TrainableEncoder* trainable_;
    int arity_;
    std::vector<std::string> paths_;
    std::vector<Example> examples_;
    const ImageProvider& provider_;
    std::vector<std::size_t> train_, val_;
    Eigen::MatrixXd features_;
    Eigen::MatrixXd inputs_;
};

std::size_t intern(std::map<std::string, std::size_t>& index, std::vector<std::string>& paths, const std::string& p) {
    auto [it, inserted] = index.try_emplace(p, paths.size());
    if (inserted) paths.push_back(p);
    return it->second;
}

std::function<std::string(std::size_t)> stage_checkpoint(const TrainConfig& cfg,
                                                          const std::function<void(const std::filesystem::path&)>& save) {
    if (!cfg.checkpoint_dir) return {};
    return [dir = *cfg.checkpoint_dir, save](std::size_t s) {
        const auto path = dir / ("stage" + std::to_string(s + 1) + ".bin");
        save(path);
        return path.string();
    };
}

}  // namespace

TrainReport train_comparator(ComparatorModel& model, std::span<const PairExample> pairs, const TrainConfig& cfg,
                             const ImageProvider& images) {
    cfg.validate();
    if (pairs.empty()) throw TrainingError("train_comparator: no training pairs");
    std::map<std::string, std::size_t> index;
    std::vector<std::string> paths;
    std::vector<Example> examples;
    examples.reserve(pairs.size());
    for (const auto& p : pairs) {
        Example e;
        e.images = {intern(index, paths, p.image_a_path), intern(index, paths, p.image_b_path)};
        e.target = p.target;
        e.group = p.base_id;
        examples.push_back(std::move(e));
    }
    Trainer trainer(model.head(), model.encoder(), 2, std::move(paths), std::move(examples), images);
    return trainer.run(cfg, stage_checkpoint(cfg, [&](const std::filesystem::path& p) {
                           save_model(model, p, json{{"training", to_json(cfg)}});
                       }));
}

TrainReport train_estimator(EstimatorModel& model, std::span<const LabeledImage> labeled, const TrainConfig& cfg,
                            const ImageProvider& images) {
    cfg.validate();
    if (labeled.empty()) throw TrainingError("train_estimator: no labeled images");
    std::map<std::string, std::size_t> index;
    std::vector<std::string> paths;
    std::vector<Example> examples;
    std::vector<double> scores;
    for (const auto& l : labeled) {
        if (!(l.score >= 1.0 && l.score <= 10.0))
            throw ValidationError("score", "label " + std::to_string(l.score) + " for " + l.path + " is outside [1,10]");
        Example e;
        e.images = {intern(index, paths, l.path), 0};
        e.target = l.score;
        e.group = l.path;
        examples.push_back(std::move(e));
        scores.push_back(l.score);
    }
    if (!model.trained()) {
        // Start the output at the median label so early steps fit shape, not offset.
        std::nth_element(scores.begin(), scores.begin() + static_cast<std::ptrdiff_t>(scores.size() / 2), scores.end());
        model.head().layers().back().bias(0) = scores[scores.size() / 2];
    }
    Trainer trainer(model.head(), model.encoder(), 1, std::move(paths), std::move(examples), images);
    auto report = trainer.run(cfg, stage_checkpoint(cfg, [&](const std::filesystem::path& p) {
                                  save_model(model, p, json{{"training", to_json(cfg)}});
                              }));
    model.mark_trained();
    return report;
}

// --- checkpoints -------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'A', 'P', 'P', 'E', 'A', 'L', 'M', '1'};

void write_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }
std::uint32_t read_u32(std::istream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}

void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
    write_u32(out, static_cast<std::uint32_t>(m.rows()));
    write_u32(out, static_cast<std::uint32_t>(m.cols()));
    out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
}

Eigen::MatrixXd read_matrix(std::istream& in) {
    const auto rows = read_u32(in), cols = read_u32(in);
    Eigen::MatrixXd m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
    return m;
}

void save_weights(const std::filesystem::path& path, std::string_view kind, const Mlp& head,
                  const ImageEncoder& encoder, const std::vector<int>& hidden, const json& extra) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out.write(kMagic, sizeof kMagic);
        write_u32(out, static_cast<std::uint32_t>(head.layers().size()));
        for (const auto& l : head.layers()) {
            write_matrix(out, l.weight);
            write_matrix(out, Eigen::MatrixXd(l.bias));
        }
        const TrainableEncoder* t = encoder.trainable();
        write_u32(out, t ? 1u : 0u);
        if (t) write_matrix(out, t->weights());
        if (!out) throw std::runtime_error("cannot write checkpoint " + tmp);
    }
    std::filesystem::rename(tmp, path);
    json meta{{"kind", kind},
              {"head_widths", head.widths()},
              {"hidden", hidden},
              {"encoder_id", encoder.id()},
              {"encoder_dimension", encoder.dimension()},
              {"encoder_weights", encoder.trainable() != nullptr}};
    if (extra.is_object())
        for (const auto& [k, v] : extra.items()) meta[k] = v;
    write_json_atomic(path.string() + ".json", meta);
}

void load_weights(const std::filesystem::path& path, std::string_view kind, Mlp& head, ImageEncoder& encoder) {
    const json meta = read_json(path.string() + ".json");
    if (meta.at("kind").get<std::string>() != kind)
        throw ValidationError("checkpoint", path.string() + " holds a " + meta.at("kind").get<std::string>() +
                                                " model, expected " + std::string(kind));
    if (meta.at("encoder_id").get<std::string>() != encoder.id() ||
        meta.at("encoder_dimension").get<int>() != encoder.dimension())
        throw ValidationError("backends.encoder", "checkpoint " + path.string() + " was trained with encoder " +
                                                      meta.at("encoder_id").get<std::string>() + " (dimension " +
                                                      std::to_string(meta.at("encoder_dimension").get<int>()) + ")");
    std::ifstream in(path, std::ios::binary);
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0)
        throw ValidationError("checkpoint", path.string() + " is not a model checkpoint");
    const auto n = read_u32(in);
    if (n != head.layers().size()) throw ValidationError("checkpoint", "layer count mismatch in " + path.string());
    for (auto& l : head.layers()) {
        Eigen::MatrixXd w = read_matrix(in);
        Eigen::MatrixXd b = read_matrix(in);
        if (w.rows() != l.weight.rows() || w.cols() != l.weight.cols() || b.rows() != l.bias.size())
            throw ValidationError("checkpoint", "layer shape mismatch in " + path.string());
        l.weight = std::move(w);
        l.bias = b.col(0);
    }
    if (read_u32(in) == 1u) {
        Eigen::MatrixXd w = read_matrix(in);
        TrainableEncoder* t = encoder.trainable();
        if (!t || w.rows() != t->weights().rows() || w.cols() != t->weights().cols())
            throw ValidationError("checkpoint", "encoder weight shape mismatch in " + path.string());
        t->weights() = std::move(w);
    }
    if (!in) throw ValidationError("checkpoint", path.string() + " is truncated");
}

}  // namespace

void save_model(const ComparatorModel& model, const std::filesystem::path& path, const json& extra) {
    save_weights(path, "comparator", model.head(), model.encoder(), model.hidden(), extra);
}

void save_model(const EstimatorModel& model, const std::filesystem::path& path, const json& extra) {
    save_weights(path, "estimator", model.head(), model.encoder(), model.hidden(), extra);
}

ComparatorModel load_comparator(const std::filesystem::path& path, std::shared_ptr<ImageEncoder> encoder) {
    const json meta = read_json(path.string() + ".json");
    ComparatorModel model(std::move(encoder), meta.at("hidden").get<std::vector<int>>());
    load_weights(path, "comparator", model.head(), model.encoder());
    return model;
}

EstimatorModel load_estimator(const std::filesystem::path& path, std::shared_ptr<ImageEncoder> encoder) {
    const json meta = read_json(path.string() + ".json");
    EstimatorModel model(std::move(encoder), meta.at("hidden").get<std::vector<int>>());
    load_weights(path, "estimator", model.head(), model.encoder());
    model.mark_trained();
    return model;
}

}  // namespace appeal
