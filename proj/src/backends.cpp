// Copyright 2026 The appeal authors
// SPDX-License-Identifier: Apache-2.0

#include "appeal/backends.hpp"

#include <bit>
#include <cstring>

#include "appeal/error.hpp"
#include "appeal/http_backends.hpp"
#include "appeal/mocks.hpp"

namespace appeal {

std::uint64_t Conditioning::hash() const noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (double v : vector) {
        auto bits = std::bit_cast<std::uint64_t>(v);
        for (int i = 0; i < 8; ++i) {
            h ^= (bits >> (8 * i)) & 0xff;
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

std::string_view to_string(Role role) noexcept {
    switch (role) {
        case Role::captioner: return "captioner";
        case Role::segmenter: return "segmenter";
        case Role::inpainter: return "inpainter";
        case Role::inversion_trainer: return "inversion_trainer";
        case Role::upscaler: return "upscaler";
        case Role::depth: return "depth";
        case Role::encoder: return "encoder";
        case Role::image_source: return "image_source";
    }
    return "?";
}

Role role_from_string(std::string_view name) {
    for (Role r : kAllRoles)
        if (to_string(r) == name) return r;
    std::string known;
    for (Role r : kAllRoles) known += (known.empty() ? "" : ", ") + std::string(to_string(r));
    throw ConfigError("unknown backend role '" + std::string(name) + "' (roles: " + known + ")");
}

namespace {

std::string mock_id(Role role) {
    switch (role) {
        case Role::captioner: return "mock-captioner";
        case Role::segmenter: return "mock-segmenter";
        case Role::inpainter: return "mock-inpainter";
        case Role::inversion_trainer: return "mock-inversion";
        case Role::upscaler: return "mock-upscaler";
        case Role::depth: return "mock-depth";
        case Role::encoder: return "mock-encoder";
        case Role::image_source: return "mock-source";
    }
    return {};
}

std::string joined(const std::vector<std::string>& v) {
    std::string out;
    for (const auto& s : v) out += (out.empty() ? "" : ", ") + s;
    return out;
}

std::shared_ptr<Backend> make_mock(Role role, const json& o) {
    switch (role) {
        case Role::captioner: {
            std::map<std::string, std::string> by_id;
            if (o.contains("captions")) {
                for (const auto& [k, v] : read_json(o["captions"].get<std::string>()).items())
                    by_id[k] = v.get<std::string>();
            }
            if (o.contains("captions_map"))
                for (const auto& [k, v] : o["captions_map"].items()) by_id[k] = v.get<std::string>();
            std::optional<std::string> fallback;
            if (o.contains("default")) fallback = o["default"].get<std::string>();
            return std::make_shared<mock::MockCaptioner>(std::move(by_id), std::move(fallback));
        }
        case Role::segmenter: {
            mock::MockSegmenter::Options opt;
            opt.key_hue = o.value("key_hue", opt.key_hue);
            opt.hue_tolerance = o.value("hue_tolerance", opt.hue_tolerance);
            opt.min_saturation = o.value("min_saturation", opt.min_saturation);
            if (o.contains("word_hues"))
                for (const auto& [k, v] : o["word_hues"].items()) opt.word_hues[k] = v.get<double>();
            return std::make_shared<mock::MockSegmenter>(std::move(opt));
        }
        case Role::inpainter: {
            const auto mode = o.value("mode", std::string("fill"));
            if (mode != "fill" && mode != "toy")
                throw ConfigError("mock-inpainter mode must be fill|toy, got '" + mode + "'");
            return std::make_shared<mock::MockInpainter>(
                mode == "toy" ? mock::MockInpainter::Mode::toy : mock::MockInpainter::Mode::fill,
                o.value("hue", mock::kToyHue));
        }
        case Role::inversion_trainer:
            return std::make_shared<mock::MockInversionTrainer>(o.value("dimension", std::size_t{16}));
        case Role::upscaler: return std::make_shared<mock::MockUpscaler>();
        case Role::depth: return std::make_shared<mock::MockDepth>();
        case Role::encoder:
            return std::make_shared<mock::MockEncoder>(o.value("dimension", 64), o.value("grid", 16),
                                                       o.value("seed", std::uint64_t{1234}));
        case Role::image_source:
            if (!o.contains("corpus")) throw ConfigError("mock-source requires a 'corpus' option");
            return std::make_shared<mock::MockImageSource>(o["corpus"].get<std::string>(),
                                                           o.value("delay_ms", 0));
    }
    throw ConfigError("unknown backend role");
}

}  // namespace

std::vector<std::string> available_implementations(Role role) { return {mock_id(role), "http"}; }

std::shared_ptr<Backend> make_backend(Role role, const BackendSpec& spec) {
    try {
        if (spec.impl == mock_id(role)) return make_mock(role, spec.options);
        if (spec.impl == "http") return http::make_http_backend(role, spec.options);
    } catch (const json::exception& e) {
        throw ConfigError("backends." + std::string(to_string(role)) + ": " + e.what());
    }
    throw ConfigError("backends." + std::string(to_string(role)) + ": unknown implementation '" +
                      spec.impl + "' (available: " + joined(available_implementations(role)) + ")");
}

void BackendRegistry::bind(Role role, std::shared_ptr<Backend> backend) {
    if (!backend) throw ConfigError("cannot bind a null backend to " + std::string(to_string(role)));
    if (!bindings_.emplace(role, std::move(backend)).second)
        throw ConfigError("backend role '" + std::string(to_string(role)) + "' bound twice");
}

std::string BackendRegistry::bound_id(Role role) const { return resolve(role)->id(); }

std::shared_ptr<Backend> BackendRegistry::resolve(Role role) const {
    auto it = bindings_.find(role);
    if (it == bindings_.end())
        throw ConfigError("backend role '" + std::string(to_string(role)) +
                          "' is not bound (available implementations: " +
                          joined(available_implementations(role)) + ")");
    return it->second;
}

void BackendRegistry::throw_wrong_interface(Role role) const {
    throw ConfigError("backend bound to '" + std::string(to_string(role)) + "' (" +
                      bindings_.at(role)->id() + ") does not implement that role");
}

BackendRegistry make_registry(const std::map<Role, BackendSpec>& specs) {
    BackendRegistry reg;
    for (const auto& [role, spec] : specs) reg.bind(role, make_backend(role, spec));
    return reg;
}

std::shared_ptr<Backend> resolve(const BackendRegistry& registry, Role role) {
    return registry.resolve(role);
}

std::vector<MockContract> mock_contracts() {
    return {
        {Role::captioner, "mock-captioner",
         "fixed map image id -> caption (from a JSON sidecar); optional default caption", true, true},
        {Role::segmenter, "mock-segmenter",
         "1 where pixel hue is within tolerance of the key hue and saturation >= min, else 0; "
         "phrase words may select per-word key hues",
         true, true},
        {Role::inpainter, "mock-inpainter",
         "binarizes the mask at 0.5; fill mode paints a solid colour keyed by (seed, conditioning "
         "hash); toy mode sets masked saturation to 0.2 + 0.7 * alpha (alpha = conditioning[0]) "
         "and fills unconditioned requests with seed-keyed textured grey",
         true, true},
        {Role::inversion_trainer, "mock-inversion",
         "vector[0] = 1 for positive, 0 for negative; remaining channels hashed from sorted exemplar ids",
         true, true},
        {Role::upscaler, "mock-upscaler", "bicubic x2", true, true},
        {Role::depth, "mock-depth", "per-pixel luminance in [0,1]", true, true},
        {Role::encoder, "mock-encoder",
         "fixed-seed Gaussian random projection of a 16x16 RGB box downsample; output dimension d "
         "for any input size; weights trainable",
         true, true},
        {Role::image_source, "mock-source", "serves <corpus>/<query-slug>/<rank>.png in rank order",
         true, true},
    };
}

}  // namespace appeal
