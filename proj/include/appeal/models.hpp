// Copyright 2026 The appeal authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "appeal/backends.hpp"
#include "appeal/synthesis.hpp"

namespace appeal {

/// Fully connected stack with ReLU between layers and a linear output.
class Mlp {
public:
    struct Layer {
        Eigen::MatrixXd weight;  ///< out x in
        Eigen::VectorXd bias;
    };

    Mlp() = default;
    /// widths = {in, hidden..., out}; uniform(-1/sqrt(in), 1/sqrt(in)) init.
    Mlp(std::vector<int> widths, std::uint64_t seed, bool zero_last = false);

    const std::vector<int>& widths() const noexcept { return widths_; }
    std::vector<Layer>& layers() noexcept { return layers_; }
    const std::vector<Layer>& layers() const noexcept { return layers_; }
    std::size_t parameter_count() const noexcept;

    struct Tape {
        std::vector<Eigen::MatrixXd> inputs;  ///< input of each layer (post-ReLU)
    };

    /// Column-per-example forward pass.
    Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Tape* tape = nullptr) const;

    /// Backpropagates dL/dy; returns dL/dx and writes parameter gradients.
    Eigen::MatrixXd backward(const Tape& tape, const Eigen::MatrixXd& dy, std::vector<Layer>& grads) const;

private:
    std::vector<int> widths_;
    std::vector<Layer> layers_;
};

struct AdamWOptions {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;

    friend bool operator==(const AdamWOptions&, const AdamWOptions&) = default;
};

/// Decoupled-weight-decay Adam over a list of parameter blocks.
class AdamW {
public:
    using Options = AdamWOptions;

    explicit AdamW(double lr, Options opts = {}) : lr_(lr), opts_(opts) {}
    void step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads);
    long steps() const noexcept { return t_; }

private:
    double lr_;
    Options opts_;
    long t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

struct TrainStage {
    bool freeze_encoder = true;
    int epochs = 10;
    double learning_rate = 1e-3;
    int batch_size = 16;

    friend bool operator==(const TrainStage&, const TrainStage&) = default;
};

struct TrainConfig {
    std::vector<TrainStage> stages{{true, 10, 1e-3, 16}, {false, 10, 1e-5, 16}};
    std::string optimizer = "adamw";
    AdamWOptions adamw{};
    std::uint64_t seed = 0;
    double validation_fraction = 0.05;
    /// Written after each stage when set: `<dir>/stage<i>.bin` (+ .json).
    std::optional<std::filesystem::path> checkpoint_dir;

    void validate() const;
    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

json to_json(const TrainStage& s);
json to_json(const TrainConfig& c);

struct PairExample {
    std::string image_a_path;
    std::string image_b_path;
    double target = 0.0;  ///< alpha_a - alpha_b
    std::string base_id;
    std::string sample_a;
    std::string sample_b;

    friend bool operator==(const PairExample&, const PairExample&) = default;
};

json to_json(const PairExample& p);
PairExample pair_from_json(const json& j);

/// Unordered pairs sampled without replacement within each base, each emitted
/// in both orders with negated targets.
std::vector<PairExample> make_pairs(std::span<const SyntheticSample> samples, int per_base_pairs,
                                    std::uint64_t seed);

/// Maps a manifest path to pixels. The default reads PNG files relative to a root.
using ImageProvider = std::function<Image(const std::string& path)>;
ImageProvider png_provider(std::filesystem::path root = {});

inline const std::vector<int> kComparatorHidden = {512, 128};
inline const std::vector<int> kEstimatorHidden = {512, 128};

/// Siamese comparator: one encoder serves both branches; head(concat(f_a, f_b)).
class ComparatorModel {
public:
    ComparatorModel(std::shared_ptr<ImageEncoder> encoder, std::vector<int> hidden = kComparatorHidden,
                    std::uint64_t seed = 0, bool zero_head = false);

    /// Encoder serving branch `i` (0 or 1). Both branches return the same object.
    ImageEncoder& branch(int i) const;
    ImageEncoder& encoder() const noexcept { return *encoder_; }
    Mlp& head() noexcept { return head_; }
    const Mlp& head() const noexcept { return head_; }
    const std::vector<int>& hidden() const noexcept { return hidden_; }

    double predict(const Image& a, const Image& b) const;
    double predict_features(const Eigen::VectorXd& fa, const Eigen::VectorXd& fb) const;

private:
    std::shared_ptr<ImageEncoder> encoder_;
    std::vector<int> hidden_;
    Mlp head_;
};

class EstimatorModel {
public:
    EstimatorModel(std::shared_ptr<ImageEncoder> encoder, std::vector<int> hidden = kEstimatorHidden,
                   std::uint64_t seed = 0, bool zero_head = false);

    ImageEncoder& encoder() const noexcept { return *encoder_; }
    Mlp& head() noexcept { return head_; }
    const Mlp& head() const noexcept { return head_; }
    const std::vector<int>& hidden() const noexcept { return hidden_; }

    double predict(const Image& image) const;
    double predict_features(const Eigen::VectorXd& f) const;
    /// Scores a batch (one image per column of the returned row).
    std::vector<double> predict_batch(std::span<const Image> images) const;

    bool trained() const noexcept { return trained_; }
    void mark_trained() noexcept { trained_ = true; }

private:
    std::shared_ptr<ImageEncoder> encoder_;
    std::vector<int> hidden_;
    Mlp head_;
    bool trained_ = false;
};

struct StageReport {
    TrainStage stage;
    std::vector<double> epoch_loss;  ///< mean training L1 per epoch
    std::optional<double> validation_loss;
    bool encoder_updated = false;
    std::optional<std::string> checkpoint;
};

struct TrainReport {
    std::vector<StageReport> stages;
    std::size_t train_size = 0;
    std::size_t validation_size = 0;
    std::optional<double> validation_loss;  ///< after the last stage
    std::vector<double> loss_trace() const;
};

json to_json(const TrainReport& r);

TrainReport train_comparator(ComparatorModel& model, std::span<const PairExample> pairs, const TrainConfig& cfg,
                             const ImageProvider& images);

double comparator_predict(const ComparatorModel& model, const Image& a, const Image& b);

struct LabeledImage {
    std::string path;
    double score = 0.0;
};

TrainReport train_estimator(EstimatorModel& model, std::span<const LabeledImage> labeled, const TrainConfig& cfg,
                            const ImageProvider& images);

/// Binary weights at `path` plus `<path>.json` metadata.
void save_model(const ComparatorModel& model, const std::filesystem::path& path, const json& extra = {});
void save_model(const EstimatorModel& model, const std::filesystem::path& path, const json& extra = {});
/// The encoder must be the backend the model was trained with (id and dimension are checked).
ComparatorModel load_comparator(const std::filesystem::path& path, std::shared_ptr<ImageEncoder> encoder);
EstimatorModel load_estimator(const std::filesystem::path& path, std::shared_ptr<ImageEncoder> encoder);

}  // namespace appeal
