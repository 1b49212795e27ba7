// Copyright 2026 The appeal authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <map>

#include "appeal/error.hpp"
#include "appeal/mocks.hpp"
#include "appeal/models.hpp"
#include "support.hpp"

using namespace appeal;

namespace {

/// Images served from memory by manifest path.
struct MemoryImages {
    std::map<std::string, Image> images;
    ImageProvider provider() const {
        return [this](const std::string& p) { return images.at(p); };
    }
};

TrainConfig single_stage(int epochs, double lr, int batch, bool freeze = true) {
    TrainConfig c;
    c.stages = {{freeze, epochs, lr, batch}};
    c.validation_fraction = 0.0;
    c.seed = 3;
    return c;
}

std::vector<SyntheticSample> samples_for(int bases, int per_base) {
    std::vector<SyntheticSample> out;
    SplitMix rng(77);
    for (int b = 0; b < bases; ++b)
        for (int i = 0; i < per_base; ++i) {
            SyntheticSample s;
            s.id = "b" + std::to_string(b) + "s" + std::to_string(i);
            s.base_id = "b" + std::to_string(b);
            s.alpha = rng.uniform();
            s.path = s.id + ".png";
            out.push_back(s);
        }
    return out;
}

}  // namespace

TEST_CASE("default training schedule") {
    const TrainConfig c;
    REQUIRE(c.stages.size() == 2);
    CHECK(c.stages[0] == TrainStage{true, 10, 1e-3, 16});
    CHECK(c.stages[1] == TrainStage{false, 10, 1e-5, 16});
    CHECK(c.optimizer == "adamw");
    CHECK(kComparatorHidden == std::vector<int>{512, 128});
    CHECK(kEstimatorHidden == std::vector<int>{512, 128});
    CHECK_NOTHROW(c.validate());
}

TEST_CASE("training config validation names the field") {
    TrainConfig c;
    c.stages[1].learning_rate = 0.0;
    try {
        c.validate();
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(e.field() == "training.stages[1].learning_rate");
    }
    c = TrainConfig{};
    c.stages.clear();
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = TrainConfig{};
    c.optimizer = "sgd";
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = TrainConfig{};
    c.validation_fraction = 1.0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("mlp backward matches finite differences") {
    const Mlp net({5, 7, 4, 1}, 12);
    SplitMix rng(1);
    Eigen::MatrixXd x(5, 3);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    Eigen::MatrixXd w(1, 3);
    w << 0.3, -1.2, 0.7;
    auto loss = [&](const Mlp& m, const Eigen::MatrixXd& in) { return (m.forward(in).array() * w.array()).sum(); };
    Mlp::Tape tape;
    net.forward(x, &tape);
    std::vector<Mlp::Layer> grads;
    const Eigen::MatrixXd dx = net.backward(tape, w, grads);
    const double h = 1e-6;
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
        for (Eigen::Index k = 0; k < net.layers()[l].weight.size(); ++k) {
            Mlp p = net, m = net;
            p.layers()[l].weight.data()[k] += h;
            m.layers()[l].weight.data()[k] -= h;
            const double fd = (loss(p, x) - loss(m, x)) / (2 * h);
            REQUIRE(grads[l].weight.data()[k] == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
        }
        for (Eigen::Index k = 0; k < net.layers()[l].bias.size(); ++k) {
            Mlp p = net, m = net;
            p.layers()[l].bias(k) += h;
            m.layers()[l].bias(k) -= h;
            REQUIRE(grads[l].bias(k) == doctest::Approx((loss(p, x) - loss(m, x)) / (2 * h)).epsilon(1e-5).scale(1.0));
        }
    }
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        Eigen::MatrixXd p = x, m = x;
        p.data()[k] += h;
        m.data()[k] -= h;
        REQUIRE(dx.data()[k] == doctest::Approx((loss(net, p) - loss(net, m)) / (2 * h)).epsilon(1e-5).scale(1.0));
    }
    CHECK(net.parameter_count() == 5 * 7 + 7 + 7 * 4 + 4 + 4 + 1);
}

TEST_CASE("adamw step matches a hand computation") {
    std::vector<double> p{1.0, -2.0};
    const std::vector<double> g1{0.5, -0.1}, g2{-0.2, 0.3};
    AdamW opt(0.1, {0.9, 0.999, 1e-8, 0.01});
    std::vector<std::span<double>> ps{p};
    opt.step(ps, std::vector<std::span<const double>>{g1});
    opt.step(ps, std::vector<std::span<const double>>{g2});
    for (int i = 0; i < 2; ++i) {
        double x = i == 0 ? 1.0 : -2.0, m = 0, v = 0;
        const double gs[2] = {g1[static_cast<std::size_t>(i)], g2[static_cast<std::size_t>(i)]};
        for (int t = 1; t <= 2; ++t) {
            const double g = gs[t - 1];
            m = 0.9 * m + 0.1 * g;
            v = 0.999 * v + 0.001 * g * g;
            const double mh = m / (1 - std::pow(0.9, t)), vh = v / (1 - std::pow(0.999, t));
            x = x - 0.1 * 0.01 * x - 0.1 * mh / (std::sqrt(vh) + 1e-8);
        }
        CHECK(p[static_cast<std::size_t>(i)] == doctest::Approx(x).epsilon(1e-12));
    }
    CHECK(opt.steps() == 2);
}

TEST_CASE("pair targets equal the alpha difference and are symmetric") {
    const auto samples = samples_for(60, 18);
    std::map<std::string, double> alpha;
    for (const auto& s : samples) alpha[s.id] = s.alpha;
    const auto pairs = make_pairs(samples, 25, 5);
    REQUIRE(pairs.size() == 60u * 25u * 2u);
    std::multiset<double> targets;
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& p : pairs) {
        REQUIRE(p.target == alpha.at(p.sample_a) - alpha.at(p.sample_b));
        REQUIRE(p.sample_a.substr(0, p.sample_a.find('s')) == p.base_id);
        REQUIRE(p.sample_b.substr(0, p.sample_b.find('s')) == p.base_id);
        REQUIRE(p.sample_a != p.sample_b);
        REQUIRE(seen.insert({p.sample_a, p.sample_b}).second);
        targets.insert(p.target);
    }
    for (double t : targets) REQUIRE(targets.count(t) == targets.count(-t));
    CHECK(make_pairs(samples, 25, 5) == pairs);
    CHECK(make_pairs(samples, 25, 6) != pairs);
}

TEST_CASE("small bases yield every unordered pair once") {
    const auto samples = samples_for(2, 4);
    const auto pairs = make_pairs(samples, 25, 1);
    CHECK(pairs.size() == 2u * 6u * 2u);
    CHECK_THROWS_AS(make_pairs(samples, 0, 1), ValidationError);
    CHECK(make_pairs(samples_for(3, 1), 5, 1).empty());
}

TEST_CASE("pair json round trip") {
    const PairExample p{"a.png", "b.png", -0.25, "base", "sa", "sb"};
    CHECK(pair_from_json(to_json(p)) == p);
}

TEST_CASE("comparator branches share one encoder") {
    auto enc = std::make_shared<mock::MockEncoder>(16, 8, 2);
    const ComparatorModel m(enc, {8}, 1);
    CHECK(&m.branch(0) == &m.branch(1));
    CHECK(&m.encoder() != enc.get());
    CHECK_THROWS(m.branch(2));
    SplitMix rng(2);
    const Image a = testing::random_image(16, 16, rng), b = testing::random_image(16, 16, rng);
    CHECK(comparator_predict(m, a, b) == m.predict_features(enc->encode(a), enc->encode(b)));
}

TEST_CASE("comparator overfits ten pairs") {
    MemoryImages mem;
    std::vector<PairExample> pairs;
    for (int i = 0; i < 10; ++i) {
        const double a = 0.1 * i, b = 1.0 - 0.07 * i;
        const std::string pa = "a" + std::to_string(i), pb = "b" + std::to_string(i);
        mem.images[pa] = mock::toy_scene(32, a, static_cast<std::uint64_t>(i));
        mem.images[pb] = mock::toy_scene(32, b, static_cast<std::uint64_t>(100 + i));
        pairs.push_back({pa, pb, a - b, "g" + std::to_string(i), pa, pb});
    }
    ComparatorModel m(std::make_shared<mock::MockEncoder>(), {64, 32}, 9);
    const auto report = train_comparator(m, pairs, single_stage(200, 1e-3, 4), mem.provider());
    REQUIRE(report.stages.size() == 1);
    CHECK(report.stages[0].epoch_loss.size() == 200);
    CHECK(report.stages[0].epoch_loss.back() < 0.05);
    CHECK(report.stages[0].epoch_loss.back() < report.stages[0].epoch_loss.front());
    CHECK_FALSE(report.stages[0].encoder_updated);
}

TEST_CASE("unfrozen stages update the encoder weights") {
    MemoryImages mem;
    std::vector<PairExample> pairs;
    for (int i = 0; i < 6; ++i) {
        mem.images["x" + std::to_string(i)] = mock::toy_scene(32, i / 5.0, static_cast<std::uint64_t>(i));
    }
    for (int i = 0; i + 1 < 6; ++i)
        pairs.push_back({"x" + std::to_string(i), "x" + std::to_string(i + 1), -0.2, "g", "", ""});
    ComparatorModel m(std::make_shared<mock::MockEncoder>(), {16}, 1);
    const Eigen::MatrixXd before = m.encoder().trainable()->weights();
    const auto r = train_comparator(m, pairs, single_stage(3, 1e-3, 2, false), mem.provider());
    CHECK(r.stages[0].encoder_updated);
    CHECK((m.encoder().trainable()->weights() - before).norm() > 0.0);
    ComparatorModel frozen(std::make_shared<mock::MockEncoder>(), {16}, 1);
    train_comparator(frozen, pairs, single_stage(3, 1e-3, 2, true), mem.provider());
    CHECK(frozen.encoder().trainable()->weights() == before);
}

TEST_CASE("training is deterministic for a fixed seed") {
    MemoryImages mem;
    std::vector<PairExample> pairs;
    for (int i = 0; i < 8; ++i) mem.images[std::to_string(i)] = mock::toy_scene(32, i / 7.0, static_cast<std::uint64_t>(i));
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j)
            if (i != j) pairs.push_back({std::to_string(i), std::to_string(j), (i - j) / 7.0, std::to_string(i), "", ""});
    TrainConfig cfg;
    cfg.stages = {{true, 2, 1e-3, 4}, {false, 2, 1e-5, 4}};
    cfg.seed = 4;
    ComparatorModel a(std::make_shared<mock::MockEncoder>(), {16}, 1), b(std::make_shared<mock::MockEncoder>(), {16}, 1);
    const auto ra = train_comparator(a, pairs, cfg, mem.provider());
    const auto rb = train_comparator(b, pairs, cfg, mem.provider());
    CHECK(to_json(ra) == to_json(rb));
    CHECK(ra.validation_size > 0);
    CHECK(ra.validation_loss.has_value());
    CHECK(a.predict(mem.images["0"], mem.images["7"]) == b.predict(mem.images["0"], mem.images["7"]));
    CHECK_THROWS_AS(train_comparator(a, {}, cfg, mem.provider()), TrainingError);
}

TEST_CASE("estimator fits twenty labeled images") {
    MemoryImages mem;
    std::vector<LabeledImage> labeled;
    for (int i = 0; i < 20; ++i) {
        const std::string p = "e" + std::to_string(i);
        mem.images[p] = mock::toy_scene(32, i / 19.0, static_cast<std::uint64_t>(50 + i));
        labeled.push_back({p, 1.0 + 9.0 * i / 19.0});
    }
    EstimatorModel m(std::make_shared<mock::MockEncoder>(), {64, 32}, 5);
    train_estimator(m, labeled, single_stage(1000, 3e-3, 4), mem.provider());
    CHECK(m.trained());
    double mae = 0;
    std::vector<Image> imgs;
    for (const auto& l : labeled) {
        mae += std::abs(m.predict(mem.images[l.path]) - l.score);
        imgs.push_back(mem.images[l.path]);
    }
    CHECK(mae / 20 < 0.1);
    const auto batch = m.predict_batch(imgs);
    for (std::size_t i = 0; i < imgs.size(); ++i) CHECK(batch[i] == doctest::Approx(m.predict(imgs[i])).epsilon(1e-12));
    labeled[0].score = 11.0;
    CHECK_THROWS_AS(train_estimator(m, labeled, single_stage(1, 1e-3, 4), mem.provider()), ValidationError);
}

TEST_CASE("checkpoints round trip and refuse a different encoder") {
    testing::TempDir dir("model");
    auto enc = std::make_shared<mock::MockEncoder>(16, 8, 3);
    const ComparatorModel c(enc, {8, 4}, 6);
    save_model(c, dir / "c.bin");
    const ComparatorModel c2 = load_comparator(dir / "c.bin", enc);
    SplitMix rng(1);
    const Image a = testing::random_image(24, 24, rng), b = testing::random_image(24, 24, rng);
    CHECK(c2.predict(a, b) == c.predict(a, b));
    CHECK(c2.hidden() == c.hidden());
    CHECK_THROWS(load_comparator(dir / "c.bin", std::make_shared<mock::MockEncoder>(32, 8, 3)));

    EstimatorModel e(enc, {8}, 2);
    e.mark_trained();
    save_model(e, dir / "e.bin", json{{"note", 1}});
    const EstimatorModel e2 = load_estimator(dir / "e.bin", enc);
    CHECK(e2.predict(a) == e.predict(a));
    CHECK(e2.trained());
    CHECK_THROWS(load_estimator(dir / "c.bin", enc));
}

TEST_CASE("stage checkpoints are written when a directory is set") {
    testing::TempDir dir("ckpt");
    MemoryImages mem;
    mem.images["a"] = mock::toy_scene(32, 0.1, 1);
    mem.images["b"] = mock::toy_scene(32, 0.9, 2);
    const std::vector<PairExample> pairs{{"a", "b", -0.8, "g", "", ""}, {"b", "a", 0.8, "g", "", ""}};
    TrainConfig cfg = single_stage(1, 1e-3, 2);
    cfg.stages.push_back({false, 1, 1e-5, 2});
    cfg.checkpoint_dir = dir.path();
    ComparatorModel m(std::make_shared<mock::MockEncoder>(), {8}, 1);
    const auto r = train_comparator(m, pairs, cfg, mem.provider());
    CHECK(std::filesystem::exists(dir / "stage1.bin"));
    CHECK(std::filesystem::exists(dir / "stage2.bin"));
    CHECK(*r.stages[1].checkpoint == (dir / "stage2.bin").string());
}
