// Copyright 2026 The appeal authors
// SPDX-License-Identifier: Apache-2.0

#include "appeal/http_backends.hpp"

#include <openssl/evp.h>

#include <httplib.h>

#include "appeal/error.hpp"

namespace appeal::http {

std::string base64_encode(std::span<const std::uint8_t> bytes) {
    std::string out(4 * ((bytes.size() + 2) / 3), '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                  static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
    if (text.size() % 4 != 0) throw BackendError("malformed base64 payload", false);
    std::vector<std::uint8_t> out(3 * text.size() / 4);
    const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                  static_cast<int>(text.size()));
    if (n < 0) throw BackendError("malformed base64 payload", false);
    std::size_t pad = 0;
    if (!text.empty() && text.back() == '=') ++pad;
    if (text.size() > 1 && text[text.size() - 2] == '=') ++pad;
    out.resize(static_cast<std::size_t>(n) - pad);
    return out;
}

namespace {

std::string png64(const Image& img) { return base64_encode(encode_png(img)); }
std::string gray64(const ScalarField& f) { return base64_encode(encode_png_gray(f)); }

class Endpoint {
public:
    explicit Endpoint(const json& options) {
        if (!options.contains("url") || !options["url"].is_string())
            throw ConfigError("http backend requires a string 'url' option");
        url_ = options["url"].get<std::string>();
        model_ = options.value("model", std::string{});
        timeout_s_ = options.value("timeout_s", 300);
        traits_.deterministic = options.value("deterministic", false);
        traits_.reentrant = true;
    }

    json post(const std::string& path, json body) const {
        body["model"] = model_;
        httplib::Client client(url_);
        client.set_read_timeout(timeout_s_, 0);
        client.set_write_timeout(timeout_s_, 0);
        auto res = client.Post(path, body.dump(), "application/json");
        if (!res)
            throw BackendError("http " + url_ + path + ": " + httplib::to_string(res.error()), true);
        if (res->status >= 500)
            throw BackendError("http " + url_ + path + ": status " + std::to_string(res->status), true);
        if (res->status != 200)
            throw BackendError("http " + url_ + path + ": status " + std::to_string(res->status) + " " + res->body, false);
        try {
            return json::parse(res->body);
        } catch (const json::parse_error& e) {
            throw BackendError("http " + url_ + path + ": bad json: " + e.what(), false);
        }
    }

    std::string describe(std::string_view role) const {
        return "http:" + std::string(role) + (model_.empty() ? "" : ":" + model_);
    }
    const BackendTraits& traits() const { return traits_; }

private:
    std::string url_;
    std::string model_;
    int timeout_s_;
    BackendTraits traits_;
};

template <class T>
T field(const json& j, const char* key) {
    if (!j.contains(key)) throw BackendError(std::string("response missing '") + key + "'", false);
    return j.at(key).get<T>();
}

class HttpCaptioner final : public Captioner {
public:
    explicit HttpCaptioner(const json& o) : ep_(o) {}
    std::string id() const override { return ep_.describe("captioner"); }
    BackendTraits traits() const override { return ep_.traits(); }
    std::string caption(const Image& image, std::string_view image_id) override {
        return field<std::string>(ep_.post("/caption", {{"image", png64(image)}, {"image_id", image_id}}), "caption");
    }

private:
    Endpoint ep_;
};

class HttpSegmenter final : public Segmenter {
public:
    explicit HttpSegmenter(const json& o) : ep_(o) {}
    std::string id() const override { return ep_.describe("segmenter"); }
    BackendTraits traits() const override { return ep_.traits(); }
    ScalarField segment(const Image& image, std::string_view phrase) override {
        auto r = ep_.post("/segment", {{"image", png64(image)}, {"phrase", phrase}});
        return decode_png_gray(base64_decode(field<std::string>(r, "mask")));
    }

private:
    Endpoint ep_;
};

class HttpInpainter final : public Inpainter {
public:
    explicit HttpInpainter(const json& o) : ep_(o), binarizes_(o.value("binarizes_mask", false)) {}
    std::string id() const override { return ep_.describe("inpainter"); }
    BackendTraits traits() const override { return ep_.traits(); }
    bool binarizes_mask() const override { return binarizes_; }
    Image inpaint(const InpaintRequest& req) override {
        json body{{"image", png64(req.image)},
                  {"mask", gray64(req.mask)},
                  {"prompt", req.prompt},
                  {"negative_prompt", req.negative_prompt},
                  {"seed", req.seed},
                  {"strength", req.strength},
                  {"guidance_scale", req.guidance_scale},
                  {"sampler", req.sampler}};
        if (req.token)
            body["token"] = {{"placeholder", kPlaceholderToken}, {"vector", req.token->vector}};
        if (req.depth) body["depth"] = gray64(*req.depth);
        return decode_png(base64_decode(field<std::string>(ep_.post("/inpaint", body), "image")));
    }

private:
    Endpoint ep_;
    bool binarizes_;
};

class HttpInversion final : public InversionTrainer {
public:
    explicit HttpInversion(const json& o) : ep_(o), dimension_(o.value("dimension", 1024)) {}
    std::string id() const override { return ep_.describe("inversion_trainer"); }
    BackendTraits traits() const override { return {ep_.traits().deterministic, false}; }
    std::size_t dimension() const override { return dimension_; }
    std::vector<double> train(std::span<const Image> exemplars, std::span<const std::string> ids,
                              Polarity polarity, const InversionParams& p) override {
        json images = json::array();
        for (const auto& img : exemplars) images.push_back(png64(img));
        auto r = ep_.post("/invert", {{"images", images},
                                      {"ids", std::vector<std::string>(ids.begin(), ids.end())},
                                      {"polarity", to_string(polarity)},
                                      {"batch_size", p.batch_size},
                                      {"learning_rate", p.learning_rate},
                                      {"steps", p.steps},
                                      {"placeholder", p.placeholder},
                                      {"checkpoint_path", p.checkpoint_path}});
        auto v = field<std::vector<double>>(r, "vector");
        if (v.size() != dimension_)
            throw BackendError("inversion vector has dimension " + std::to_string(v.size()) +
                                   ", expected " + std::to_string(dimension_), false);
        return v;
    }

private:
    Endpoint ep_;
    std::size_t dimension_;
};

class HttpUpscaler final : public Upscaler {
public:
    explicit HttpUpscaler(const json& o) : ep_(o), factor_(o.value("factor", 4)) {}
    std::string id() const override { return ep_.describe("upscaler"); }
    BackendTraits traits() const override { return ep_.traits(); }
    int factor() const override { return factor_; }
    Image upscale(const Image& image) override {
        return decode_png(base64_decode(field<std::string>(ep_.post("/upscale", {{"image", png64(image)}}), "image")));
    }

private:
    Endpoint ep_;
    int factor_;
};

class HttpDepth final : public DepthEstimator {
public:
    explicit HttpDepth(const json& o) : ep_(o) {}
    std::string id() const override { return ep_.describe("depth"); }
    BackendTraits traits() const override { return ep_.traits(); }
    ScalarField estimate(const Image& image) override {
        return decode_png_gray(base64_decode(field<std::string>(ep_.post("/depth", {{"image", png64(image)}}), "depth")));
    }

private:
    Endpoint ep_;
};

class HttpEncoder final : public ImageEncoder {
public:
    explicit HttpEncoder(const json& o) : options_(o), ep_(o), dimension_(o.value("dimension", 768)) {}
    std::string id() const override { return ep_.describe("encoder"); }
    BackendTraits traits() const override { return ep_.traits(); }
    int dimension() const override { return dimension_; }
    Eigen::VectorXd encode(const Image& image) const override {
        auto f = field<std::vector<double>>(ep_.post("/encode", {{"image", png64(image)}}), "features");
        if (static_cast<int>(f.size()) != dimension_)
            throw BackendError("encoder returned " + std::to_string(f.size()) + " features, expected " +
                                   std::to_string(dimension_), false);
        return Eigen::Map<Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(f.size()));
    }
    std::shared_ptr<ImageEncoder> clone() const override { return std::make_shared<HttpEncoder>(options_); }

private:
    json options_;
    Endpoint ep_;
    int dimension_;
};

class HttpSource final : public ImageSource {
public:
    explicit HttpSource(const json& o) : ep_(o) {}
    std::string id() const override { return ep_.describe("image_source"); }
    BackendTraits traits() const override { return ep_.traits(); }
    std::vector<SourceHit> search(const SearchQuery& query, int top_k) override {
        auto r = ep_.post("/search", {{"query", query.text}, {"top_k", top_k}});
        std::vector<SourceHit> hits;
        for (const auto& row : field<json>(r, "results")) {
            SourceHit hit;
            hit.rank = row.value("rank", static_cast<int>(hits.size()) + 1);
            hit.origin = row.value("origin", std::string{});
            if (row.contains("image")) {
                try {
                    hit.image = decode_png(base64_decode(row["image"].get<std::string>()));
                } catch (const std::exception& e) {
                    hit.error = e.what();
                }
            } else {
                hit.error = row.value("error", std::string("no image"));
            }
            hits.push_back(std::move(hit));
        }
        return hits;
    }

private:
    Endpoint ep_;
};

}  // namespace

std::shared_ptr<Backend> make_http_backend(Role role, const json& options) {
    switch (role) {
        case Role::captioner: return std::make_shared<HttpCaptioner>(options);
        case Role::segmenter: return std::make_shared<HttpSegmenter>(options);
        case Role::inpainter: return std::make_shared<HttpInpainter>(options);
        case Role::inversion_trainer: return std::make_shared<HttpInversion>(options);
        case Role::upscaler: return std::make_shared<HttpUpscaler>(options);
        case Role::depth: return std::make_shared<HttpDepth>(options);
        case Role::encoder: return std::make_shared<HttpEncoder>(options);
        case Role::image_source: return std::make_shared<HttpSource>(options);
    }
    throw ConfigError("unknown backend role");
}

}  // namespace appeal::http
