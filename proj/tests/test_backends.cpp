// Copyright 2026 The appeal authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <set>

#include "appeal/backends.hpp"
#include "appeal/error.hpp"
#include "appeal/mocks.hpp"
#include "support.hpp"

using namespace appeal;

TEST_CASE("role names round trip") {
    for (Role r : kAllRoles) CHECK(role_from_string(to_string(r)) == r);
    CHECK_THROWS(role_from_string("painter"));
}

TEST_CASE("every role has a mock and an http implementation") {
    for (Role r : kAllRoles) {
        CAPTURE(to_string(r));
        const auto ids = available_implementations(r);
        CHECK(ids.size() == 2);
        BackendSpec spec{ids.front(), json::object()};
        if (r == Role::image_source) spec.options["corpus"] = "/nonexistent";
        auto b = make_backend(r, spec);
        REQUIRE(b);
        CHECK(b->id() == ids.front());
    }
}

TEST_CASE("unknown implementation ids list the alternatives") {
    try {
        make_backend(Role::inpainter, {"sd-xl", json::object()});
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("sd-xl") != std::string::npos);
        CHECK(msg.find("mock-inpainter") != std::string::npos);
        CHECK(msg.find("http") != std::string::npos);
    }
    CHECK_THROWS_AS(make_backend(Role::inpainter, {"mock-inpainter", {{"mode", "paint"}}}), ConfigError);
    CHECK_THROWS_AS(make_backend(Role::image_source, {"mock-source", json::object()}), ConfigError);
    CHECK_THROWS_AS(make_backend(Role::captioner, {"http", json::object()}), ConfigError);
}

TEST_CASE("registry binds once and checks interfaces") {
    BackendRegistry reg;
    reg.bind(Role::depth, std::make_shared<mock::MockDepth>());
    CHECK(reg.bound(Role::depth));
    CHECK(reg.bound_id(Role::depth) == "mock-depth");
    CHECK_THROWS_AS(reg.bind(Role::depth, std::make_shared<mock::MockDepth>()), ConfigError);
    CHECK_THROWS_AS(reg.resolve(Role::captioner), ConfigError);
    CHECK(reg.resolve_as<DepthEstimator>(Role::depth));
    reg.bind(Role::upscaler, std::make_shared<mock::MockDepth>());
    CHECK_THROWS_AS(reg.resolve_as<Upscaler>(Role::upscaler), ConfigError);
    CHECK(resolve(reg, Role::depth) == reg.resolve(Role::depth));
}

TEST_CASE("make_registry builds every configured role") {
    std::map<Role, BackendSpec> specs{{Role::captioner, {"mock-captioner", {{"default", "a cat"}}}},
                                      {Role::encoder, {"mock-encoder", {{"dimension", 8}}}}};
    const auto reg = make_registry(specs);
    auto enc = reg.resolve_as<ImageEncoder>(Role::encoder);
    CHECK(enc->dimension() == 8);
    CHECK(reg.resolve_as<Captioner>(Role::captioner)->caption(Image(2, 2), "x") == "a cat");
}

TEST_CASE("mock contract table covers every role") {
    std::set<Role> roles;
    for (const auto& c : mock_contracts()) {
        roles.insert(c.role);
        CHECK_FALSE(c.behavior.empty());
    }
    CHECK(roles.size() == std::size(kAllRoles));
}

TEST_CASE("mock captioner: lookup, fallback, failure") {
    mock::MockCaptioner c({{"a", "pizza on a plate"}}, std::nullopt);
    CHECK(c.caption(Image(1, 1), "a") == "pizza on a plate");
    CHECK_THROWS_AS(c.caption(Image(1, 1), "b"), BackendError);
}

TEST_CASE("mock segmenter keys on hue and saturation") {
    Image img(2, 1);
    img.set(0, 0, from_hsv({mock::kToyHue, 0.8, 0.9}));
    img.set(1, 0, from_hsv({200.0, 0.8, 0.9}));
    mock::MockSegmenter seg;
    const ScalarField m = seg.segment(img, "food");
    CHECK(m.at(0, 0) == 1.0);
    CHECK(m.at(1, 0) == 0.0);
    mock::MockSegmenter::Options o;
    o.word_hues["sky"] = 200.0;
    mock::MockSegmenter keyed(o);
    CHECK(keyed.segment(img, "the sky").at(1, 0) == 1.0);
}

TEST_CASE("mock inpainter touches only pixels at or above the mask threshold") {
    SplitMix rng(1);
    const Image img = testing::random_image(16, 16, rng);
    const ScalarField mask = testing::random_mask(16, 16, 0.4, rng);
    mock::MockInpainter inp;
    InpaintRequest req{img, mask, "", std::nullopt, "", 5, 1.0, 7.0, "", nullptr};
    const Image out = inp.inpaint(req);
    int changed = 0;
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) {
            if (mask.at(x, y) < 0.5) CHECK(out.pixel(x, y) == img.pixel(x, y));
            changed += out.pixel(x, y) != img.pixel(x, y);
        }
    CHECK(changed > 0);
    CHECK(inp.inpaint(req) == out);
    ScalarField wrong(3, 3);
    InpaintRequest bad{img, wrong, "", std::nullopt, "", 5, 1.0, 7.0, "", nullptr};
    CHECK_THROWS_AS(inp.inpaint(bad), BackendError);
}

TEST_CASE("toy inpainter renders alpha as saturation") {
    Image img(4, 4, from_hsv({mock::kToyHue, 0.5, 0.8}));
    ScalarField mask(4, 4, 1.0);
    mock::MockInpainter inp(mock::MockInpainter::Mode::toy);
    for (double alpha : {0.0, 0.5, 1.0}) {
        Conditioning c{{alpha, 0.3, -0.2}};
        CHECK(mock::alpha_from_conditioning(c) == alpha);
        InpaintRequest req{img, mask, "", c, "", 1, 1.0, 7.0, "", nullptr};
        const Hsv hsv = to_hsv(inp.inpaint(req).pixel(1, 1));
        CHECK(hsv.s == doctest::Approx(mock::kToyMinSaturation + 0.7 * alpha).epsilon(0.02));
    }
}

TEST_CASE("mock inversion is deterministic in the exemplar set") {
    mock::MockInversionTrainer t(8);
    std::vector<Image> imgs(2, Image(2, 2));
    std::vector<std::string> ids{"b", "a"}, rev{"a", "b"};
    const auto v1 = t.train(imgs, ids, Polarity::positive, {});
    CHECK(v1.size() == 8);
    CHECK(v1[0] == 1.0);
    CHECK(t.train(imgs, rev, Polarity::positive, {}) == v1);
    CHECK(t.train(imgs, ids, Polarity::negative, {})[0] == 0.0);
    CHECK_THROWS_AS(t.train({}, {}, Polarity::positive, {}), BackendError);
}

TEST_CASE("mock encoder is linear in the downsampled pixels and clones independently") {
    mock::MockEncoder enc(16, 4, 7);
    CHECK(enc.dimension() == 16);
    CHECK(enc.input_dimension() == 48);
    SplitMix rng(2);
    const Image img = testing::random_image(8, 8, rng);
    const Eigen::VectorXd f = enc.encode(img);
    CHECK((f - enc.weights() * enc.preprocess(img)).norm() == 0.0);
    auto copy = enc.clone();
    copy->trainable()->weights()(0, 0) += 1.0;
    CHECK(enc.encode(img) == f);
    CHECK(copy->encode(img) != f);
}

TEST_CASE("mock upscaler doubles and mock depth is luminance") {
    mock::MockUpscaler up;
    CHECK(up.factor() == 2);
    CHECK(up.upscale(Image(3, 5)).width() == 6);
    Image img(1, 1, {255, 255, 255});
    CHECK(mock::MockDepth().estimate(img).at(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("mock image source serves rank-ordered files and truncates") {
    testing::TempDir dir("source");
    const auto q = dir / "delicious-pizza";
    std::filesystem::create_directories(q);
    for (int r = 1; r <= 5; ++r) write_png(q / (std::to_string(r) + ".png"), Image(2, 2, {static_cast<std::uint8_t>(r), 0, 0}));
    mock::MockImageSource src(dir.path());
    const auto hits = src.search({"delicious pizza", Polarity::positive, std::nullopt}, 3);
    REQUIRE(hits.size() == 3);
    for (int i = 0; i < 3; ++i) {
        CHECK(hits[i].rank == i + 1);
        REQUIRE(hits[i].image);
        CHECK(hits[i].image->pixel(0, 0).r == i + 1);
    }
    CHECK(src.search({"burnt pizza", Polarity::negative, std::string("burnt")}, 3).empty());
}
