// Copyright 2026 The appeal authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "appeal/domain.hpp"
#include "appeal/image.hpp"
#include "appeal/util.hpp"

namespace appeal {

/// Every backend states whether equal inputs (and seed) give equal outputs,
/// and whether it may be called from several threads at once.
struct BackendTraits {
    bool deterministic = true;
    bool reentrant = true;
};

class Backend {
public:
    virtual ~Backend() = default;
    virtual std::string id() const = 0;
    virtual BackendTraits traits() const { return {}; }
};

class Captioner : public Backend {
public:
    virtual std::string caption(const Image& image, std::string_view image_id) = 0;
};

/// Phrase-conditioned segmentation. Implementations should return values in
/// [0,1]; callers clamp regardless.
class Segmenter : public Backend {
public:
    virtual ScalarField segment(const Image& image, std::string_view phrase) = 0;
};

/// Opaque conditioning vector injected for the placeholder token.
struct Conditioning {
    std::vector<double> vector;

    /// FNV-1a over the IEEE bit patterns; stable across runs and platforms.
    std::uint64_t hash() const noexcept;
};

/// Token that stands for the injected conditioning vector inside a prompt.
inline constexpr std::string_view kPlaceholderToken = "<appeal>";

struct InpaintRequest {
    const Image& image;
    /// Soft mask in [0,1]; 1 = regenerate.
    const ScalarField& mask;
    std::string prompt;
    std::optional<Conditioning> token;
    std::string negative_prompt;
    std::uint64_t seed = 0;
    double strength = 1.0;
    double guidance_scale = 7.0;
    std::string sampler;
    const ScalarField* depth = nullptr;
};

class Inpainter : public Backend {
public:
    virtual Image inpaint(const InpaintRequest& request) = 0;
    /// True when the backend thresholds the soft mask internally.
    virtual bool binarizes_mask() const = 0;
};

struct InversionParams {
    int batch_size = 1;
    double learning_rate = 5e-3;
    int steps = 3000;
    std::string placeholder = std::string(kPlaceholderToken);
    /// Where the backend keeps partial state; reported on failure.
    std::string checkpoint_path;
};

/// Embedding inversion (textual-inversion style): learns one token vector from exemplars.
class InversionTrainer : public Backend {
public:
    virtual std::size_t dimension() const = 0;
    virtual std::vector<double> train(std::span<const Image> exemplars,
                                      std::span<const std::string> exemplar_ids,
                                      Polarity polarity, const InversionParams& params) = 0;
};

class Upscaler : public Backend {
public:
    /// Native integer scale factor (>= 2).
    virtual int factor() const = 0;
    virtual Image upscale(const Image& image) = 0;
};

class DepthEstimator : public Backend {
public:
    /// Normalized inverse depth in [0,1], same shape as the input.
    virtual ScalarField estimate(const Image& image) = 0;
};

class TrainableEncoder;

class ImageEncoder : public Backend {
public:
    virtual int dimension() const = 0;
    virtual Eigen::VectorXd encode(const Image& image) const = 0;
    /// Independent copy; models own their encoder so training never leaks.
    virtual std::shared_ptr<ImageEncoder> clone() const = 0;
    virtual TrainableEncoder* trainable() noexcept { return nullptr; }
    virtual const TrainableEncoder* trainable() const noexcept { return nullptr; }
};

/// Encoder of the form W * preprocess(image), with W exposed for fine-tuning.
class TrainableEncoder {
public:
    virtual ~TrainableEncoder() = default;
    virtual int input_dimension() const = 0;
    virtual Eigen::VectorXd preprocess(const Image& image) const = 0;
    virtual Eigen::MatrixXd& weights() noexcept = 0;
    virtual const Eigen::MatrixXd& weights() const noexcept = 0;
};

struct SourceHit {
    int rank = 0;
    std::optional<Image> image;
    std::string origin;
    std::string error;
};

class ImageSource : public Backend {
public:
    /// Results in source order, at most `top_k`. Throws BackendError when the
    /// source is unreachable.
    virtual std::vector<SourceHit> search(const SearchQuery& query, int top_k) = 0;
};

// --- registry ----------------------------------------------------------------

enum class Role { captioner, segmenter, inpainter, inversion_trainer, upscaler, depth, encoder, image_source };

inline constexpr Role kAllRoles[] = {Role::captioner, Role::segmenter,         Role::inpainter,
                                     Role::inversion_trainer, Role::upscaler, Role::depth,
                                     Role::encoder,   Role::image_source};

std::string_view to_string(Role role) noexcept;
Role role_from_string(std::string_view name);

/// Implementation id plus its option block from the run config.
struct BackendSpec {
    std::string impl;
    json options = json::object();
};

/// Implementation ids the factory can build for a role.
std::vector<std::string> available_implementations(Role role);

/// Builds a backend; unknown ids raise ConfigError listing the available ones.
std::shared_ptr<Backend> make_backend(Role role, const BackendSpec& spec);

class BackendRegistry {
public:
    /// Binding a role twice is a configuration error.
    void bind(Role role, std::shared_ptr<Backend> backend);
    bool bound(Role role) const noexcept { return bindings_.count(role) != 0; }
    std::string bound_id(Role role) const;

    std::shared_ptr<Backend> resolve(Role role) const;

    template <class T>
    std::shared_ptr<T> resolve_as(Role role) const {
        auto handle = std::dynamic_pointer_cast<T>(resolve(role));
        if (!handle) throw_wrong_interface(role);
        return handle;
    }

private:
    [[noreturn]] void throw_wrong_interface(Role role) const;

    std::map<Role, std::shared_ptr<Backend>> bindings_;
};

BackendRegistry make_registry(const std::map<Role, BackendSpec>& specs);

/// Free-function form of BackendRegistry::resolve.
std::shared_ptr<Backend> resolve(const BackendRegistry& registry, Role role);

struct MockContract {
    Role role;
    std::string impl;
    std::string behavior;
    bool deterministic;
    bool reentrant;
};

/// Documented behaviour of every shipped mock.
std::vector<MockContract> mock_contracts();

}  // namespace appeal
