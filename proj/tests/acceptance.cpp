// Copyright 2026 The appeal authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance run: prints one PASS/FAIL line per criterion and exits nonzero
// if any fails. Every check uses an oracle written independently here.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <spdlog/spdlog.h>

#include "appeal/appealmap.hpp"
#include "appeal/eval.hpp"
#include "appeal/labeling.hpp"
#include "appeal/mocks.hpp"
#include "appeal/models.hpp"
#include "appeal/relevancy.hpp"
#include "appeal/synthesis.hpp"

using namespace appeal;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
    void require(bool ok, const std::string& what) {
        if (!ok && pass) {
            pass = false;
            detail = what;
        }
    }
};

Image noise_image(int w, int h, SplitMix& rng) {
    Image img(w, h);
    for (auto& b : img.bytes()) b = static_cast<std::uint8_t>(rng.below(256));
    return img;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::map<std::string, std::string> tree(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = read_file(e.path());
    return out;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

// --- 1 and 10: toy harness --------------------------------------------------

Outcome criterion1(const fs::path& dir_a, std::string& note) {
    Outcome o;
    ToyHarnessConfig cfg;
    cfg.out_dir = dir_a;
    const auto t0 = std::chrono::steady_clock::now();
    const ToyHarnessResult trained = toy_harness(cfg);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    ToyHarnessConfig control;
    control.epochs = 0;
    const ToyHarnessResult untrained = toy_harness(control);
    o.require(cfg.images == 500, "toy harness default is not 500 images");
    o.require(trained.labels.size() >= 450, "too few labeled toy images");
    o.require(trained.metrics.srcc >= 0.9, "trained SRCC " + fmt(trained.metrics.srcc) + " < 0.9");
    o.require(std::abs(untrained.metrics.srcc) <= 0.3, "control |SRCC| " + fmt(untrained.metrics.srcc) + " > 0.3");
    o.require(secs < 600.0, "runtime " + fmt(secs) + " s >= 600 s");
    note = "SRCC " + fmt(trained.metrics.srcc) + ", control " + fmt(untrained.metrics.srcc) + ", " + fmt(secs) + " s";
    return o;
}

Outcome criterion10(const fs::path& dir_a, const fs::path& dir_b) {
    Outcome o;
    ToyHarnessConfig cfg;
    cfg.out_dir = dir_b;
    toy_harness(cfg);
    const auto a = tree(dir_a), b = tree(dir_b);
    o.require(!a.empty(), "first run wrote nothing");
    o.require(a.count("report.json") && a.count("labels.jsonl") && a.count("pairs.jsonl"), "manifests missing");
    o.require(a.size() == b.size(), "file sets differ");
    for (const auto& [name, bytes] : a) {
        auto it = b.find(name);
        o.require(it != b.end() && it->second == bytes, name + " differs between runs");
    }
    return o;
}

// --- 2: pair targets ----------------------------------------------------------

Outcome criterion2() {
    Outcome o;
    std::vector<SyntheticSample> samples;
    const std::vector<std::string> groups{"burnt", "spoiled"};
    for (int b = 0; b < 60; ++b) {
        auto planned = plan_base("base" + std::to_string(b), {3, 6}, groups, 99);
        for (auto& s : planned) s.path = s.id + ".png";
        samples.insert(samples.end(), planned.begin(), planned.end());
    }
    std::map<std::string, const SyntheticSample*> by_id;
    for (const auto& s : samples) by_id[s.id] = &s;
    const auto pairs = make_pairs(samples, 25, 1234);
    o.require(pairs.size() >= 1000, "fewer than 1000 pairs");
    std::map<double, long> count;
    for (const auto& p : pairs) {
        const auto* a = by_id.at(p.sample_a);
        const auto* b = by_id.at(p.sample_b);
        o.require(a->base_id == b->base_id && a->base_id == p.base_id, "pair crosses bases");
        o.require(p.target == a->alpha - b->alpha, "target != alpha_a - alpha_b");
        o.require(p.image_a_path == a->path && p.image_b_path == b->path, "paths do not match samples");
        ++count[p.target];
    }
    for (const auto& [t, c] : count) o.require(count[-t] == c, "target multiset is not symmetric");
    return o;
}

// --- 3: scale_scores ----------------------------------------------------------

Outcome criterion3() {
    Outcome o;
    SplitMix rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::pair<std::string, double>> raws;
        const int n = 2 + static_cast<int>(rng.below(300));
        for (int i = 0; i < n; ++i) raws.emplace_back(std::to_string(i), rng.uniform(-5, 5));
        const auto base = scale_scores(raws);
        double lo = raws[0].second, hi = raws[0].second;
        for (const auto& r : raws) {
            lo = std::min(lo, r.second);
            hi = std::max(hi, r.second);
        }
        std::vector<std::size_t> order(raws.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](auto x, auto y) { return raws[x].second < raws[y].second; });
        for (std::size_t i = 0; i < raws.size(); ++i) {
            if (raws[i].second == lo) o.require(base[i].scaled == 1.0, "min does not map to exactly 1");
            if (raws[i].second == hi) o.require(base[i].scaled == 10.0, "max does not map to exactly 10");
        }
        for (std::size_t k = 1; k < order.size(); ++k)
            if (raws[order[k]].second > raws[order[k - 1]].second)
                o.require(base[order[k]].scaled > base[order[k - 1]].scaled, "order not preserved");
        const double a = std::exp(rng.uniform(-6, 6)), b = rng.uniform(-1e3, 1e3);
        auto moved = raws;
        for (auto& r : moved) r.second = a * r.second + b;
        const auto m = scale_scores(moved);
        for (std::size_t i = 0; i < raws.size(); ++i)
            o.require(std::abs(m[i].scaled - base[i].scaled) <= 1e-9, "affine map changes scaled scores");
    }
    return o;
}

// --- 4: area filter -----------------------------------------------------------

Outcome criterion4() {
    Outcome o;
    SplitMix rng(4);
    int kept = 0;
    for (int i = 0; i < 50; ++i) {
        const int w = 16 + static_cast<int>(rng.below(200)), h = 16 + static_cast<int>(rng.below(200));
        const double density = rng.uniform(0.25, 0.55);
        ScalarField m(w, h);
        long long ones = 0;
        for (auto& v : m.values()) {
            v = rng.uniform() < density ? 1.0 : 0.0;
            ones += v == 1.0;
        }
        const bool oracle = 10 * ones >= 4LL * w * h;
        ImageRecord r;
        r.id = std::to_string(i);
        r.width = w;
        r.height = h;
        o.require(area_filter(r, m, 0.4) == oracle, "mask " + std::to_string(i) + " disagrees with pixel count");
        o.require((r.status == RecordStatus::kept) == oracle, "status disagrees with decision");
        kept += oracle;
    }
    o.require(kept > 0 && kept < 50, "masks did not straddle the threshold");
    return o;
}

// --- 5: heatmap ---------------------------------------------------------------

std::vector<double> heatmap_oracle(const std::vector<double>& scores) {
    const int xs[3] = {0, 4, 8};
    std::vector<double> mean(256);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) {
            double s = 0;
            int c = 0;
            for (int j = 0; j < 3; ++j)
                for (int i = 0; i < 3; ++i)
                    if (x >= xs[i] && x < xs[i] + 8 && y >= xs[j] && y < xs[j] + 8) {
                        s += scores[static_cast<std::size_t>(j * 3 + i)];
                        ++c;
                    }
            mean[static_cast<std::size_t>(y * 16 + x)] = s / c;
        }
    const double lo = *std::min_element(mean.begin(), mean.end()), hi = *std::max_element(mean.begin(), mean.end());
    for (auto& v : mean) v = hi > lo ? 1.0 - (v - lo) / (hi - lo) : 0.0;
    return mean;
}

Outcome criterion5() {
    Outcome o;
    const HeatmapConfig cfg{8, 4, "minmax"};
    SplitMix rng(5);
    auto run = [&](const Image& img, const std::vector<double>& scores) {
        const auto grid = patch_scores(img, cfg, [&](std::span<const Image> p) {
            if (p.size() != scores.size()) throw std::runtime_error("unexpected window count");
            return scores;
        });
        return build_heatmap(img, grid, cfg);
    };
    for (int trial = 0; trial < 100; ++trial) {
        const Image img = noise_image(16, 16, rng);
        std::vector<double> scores(9);
        for (auto& s : scores) s = rng.uniform(1, 10);
        const ScalarField map = run(img, scores);
        const auto want = heatmap_oracle(scores);
        for (std::size_t i = 0; i < want.size(); ++i)
            o.require(std::abs(map.values()[i] - want[i]) <= 1e-9, "heatmap differs from oracle");
        const ScalarField flat = run(img, std::vector<double>(9, scores[0]));
        o.require(flat.min() == 0.0 && flat.max() == 0.0, "constant scores do not give zeros");
        const double a = std::exp(rng.uniform(-3, 3)), b = rng.uniform(-20, 20);
        std::vector<double> moved(9);
        for (std::size_t i = 0; i < 9; ++i) moved[i] = a * scores[i] + b;
        const ScalarField m2 = run(img, moved);
        for (std::size_t i = 0; i < want.size(); ++i)
            o.require(std::abs(m2.values()[i] - map.values()[i]) <= 1e-9, "affine scores change the map");
    }
    return o;
}

// --- 6: locality --------------------------------------------------------------

class ScrambleInpainter final : public Inpainter {
public:
    std::string id() const override { return "scramble"; }
    bool binarizes_mask() const override { return false; }
    Image inpaint(const InpaintRequest& r) override {
        SplitMix rng(r.seed ^ 0x5eed);
        return noise_image(r.image.width(), r.image.height(), rng);
    }
};

Outcome criterion6() {
    Outcome o;
    SplitMix rng(6);
    ScrambleInpainter scramble;
    mock::MockInpainter fill;
    const PolarityEmbedding z{{0.4, -0.2, 0.9}, Polarity::positive, {}, {}};
    const Conditioning cond{z.vector};
    auto same_outside = [&](const Image& a, const Image& b, const std::function<bool(int, int)>& editable) {
        for (int y = 0; y < a.height(); ++y)
            for (int x = 0; x < a.width(); ++x)
                if (!editable(x, y) && !(a.pixel(x, y) == b.pixel(x, y))) return false;
        return true;
    };
    for (int i = 0; i < 100; ++i) {
        const int w = 8 + static_cast<int>(rng.below(56)), h = 8 + static_cast<int>(rng.below(56));
        const Image img = noise_image(w, h, rng);
        ScalarField rel(w, h), heat(w, h);
        for (auto& v : rel.values()) v = rng.uniform();
        for (auto& v : heat.values()) v = rng.uniform() < 0.4 ? 0.0 : rng.uniform();
        Inpainter& inp = i % 2 ? static_cast<Inpainter&>(scramble) : fill;
        const Image bg = diversify_background(img, rel, rng.next(), inp);
        o.require(same_outside(img, bg, [&](int x, int y) { return rel.at(x, y) < 0.5; }),
                  "diversify_background changed a domain pixel");
        const Image adj = adjust_appeal(img, "a plate of food", cond, rel, rng.next(), inp);
        o.require(same_outside(img, adj, [&](int x, int y) { return rel.at(x, y) >= 0.5; }),
                  "adjust_appeal changed a background pixel");
        EnhanceConfig ec;
        ec.seed = rng.next();
        const Image enh = enhance(img, "burger", &z, heat, nullptr, ec, inp);
        o.require(same_outside(img, enh, [&](int x, int y) { return heat.at(x, y) > 0.0; }),
                  "enhance changed a zero-heat pixel");
        const Image same = enhance(img, "burger", &z, ScalarField(w, h, 0.0), nullptr, ec, inp);
        o.require(same == img, "all-zero heatmap is not the identity");
    }
    return o;
}

// --- 7: metrics ---------------------------------------------------------------

long double pearson_oracle(const std::vector<double>& x, const std::vector<double>& y) {
    const long double n = static_cast<long double>(x.size());
    long double mx = 0, my = 0, sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

std::vector<double> ranks_oracle(const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        double less = 0, eq = 0;
        for (double w : v) {
            less += w < v[i];
            eq += w == v[i];
        }
        r[i] = 1 + less + (eq - 1) / 2;
    }
    return r;
}

long double kendall_oracle(const std::vector<double>& x, const std::vector<double>& y) {
    long double c = 0, d = 0, tx = 0, ty = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = i + 1; j < x.size(); ++j) {
            const double a = x[i] - x[j], b = y[i] - y[j];
            if (a == 0 && b == 0) continue;
            if (a == 0) tx += 1;
            else if (b == 0) ty += 1;
            else if ((a > 0) == (b > 0)) c += 1;
            else d += 1;
        }
    return (c - d) / std::sqrt((c + d + tx) * (c + d + ty));
}

Outcome criterion7() {
    Outcome o;
    SplitMix rng(7);
    int done = 0;
    while (done < 100) {
        const std::size_t n = 5 + rng.below(150);
        std::vector<double> x(n), y(n);
        const bool ties = done % 2 == 0;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = ties ? static_cast<double>(rng.below(7)) : rng.normal();
            y[i] = 0.3 * x[i] + (ties ? static_cast<double>(rng.below(5)) : rng.normal());
        }
        if (*std::min_element(x.begin(), x.end()) == *std::max_element(x.begin(), x.end()) ||
            *std::min_element(y.begin(), y.end()) == *std::max_element(y.begin(), y.end()))
            continue;
        const MetricReport m = correlations(x, y);
        long double se = 0;
        for (std::size_t i = 0; i < n; ++i) se += (x[i] - y[i]) * (x[i] - y[i]);
        o.require(std::abs(m.plcc - static_cast<double>(pearson_oracle(x, y))) <= 1e-9, "PLCC differs");
        o.require(std::abs(m.srcc - static_cast<double>(pearson_oracle(ranks_oracle(x), ranks_oracle(y)))) <= 1e-9,
                  "SRCC differs");
        o.require(std::abs(m.krcc - static_cast<double>(kendall_oracle(x, y))) <= 1e-9, "KRCC differs");
        o.require(std::abs(m.rmse - static_cast<double>(std::sqrt(se / n))) <= 1e-9, "RMSE differs");
        std::vector<double> fx(n), gy(n);
        for (std::size_t i = 0; i < n; ++i) {
            fx[i] = std::atan(x[i]) * 3 + 1;
            gy[i] = std::exp(0.5 * y[i]);
        }
        const MetricReport t = correlations(fx, gy);
        o.require(std::abs(t.srcc - m.srcc) <= 1e-9 && std::abs(t.krcc - m.krcc) <= 1e-9,
                  "rank metrics change under monotone transforms");
        ++done;
    }
    std::vector<double> v(50), r(50);
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = rng.uniform(1, 10);
        r[i] = -v[i];
    }
    const MetricReport id = correlations(v, v);
    o.require(std::abs(id.plcc - 1) <= 1e-12 && std::abs(id.srcc - 1) <= 1e-12 && std::abs(id.krcc - 1) <= 1e-12 &&
                  id.rmse == 0.0,
              "identity is not (1,1,1,0)");
    const MetricReport rev = correlations(v, r);
    o.require(std::abs(rev.srcc + 1) <= 1e-12 && std::abs(rev.krcc + 1) <= 1e-12, "reversal is not -1");
    return o;
}

// --- 8: blend and sample_alpha ------------------------------------------------

Outcome criterion8() {
    Outcome o;
    SplitMix rng(8);
    std::vector<double> zp(64), zn(64);
    for (auto& v : zp) v = rng.normal();
    for (auto& v : zn) v = rng.normal();
    o.require(blend(zp, zn, 1.0) == zp, "f(1) != z+");
    o.require(blend(zp, zn, 0.0) == zn, "f(0) != z-");
    for (int t = 0; t < 1000; ++t) {
        const double a = rng.uniform(), b = rng.uniform(), l = rng.uniform();
        const auto fa = blend(zp, zn, a), fb = blend(zp, zn, b), fm = blend(zp, zn, l * a + (1 - l) * b);
        for (std::size_t i = 0; i < zp.size(); ++i)
            o.require(std::abs(fm[i] - (l * fa[i] + (1 - l) * fb[i])) <= 1e-7, "blend is not affine in alpha");
    }
    for (int t = 0; t < 10000; ++t) {
        const int k = static_cast<int>(rng.below(3));
        const double d = rng.uniform(-0.2, 0.2);
        double want = 0.5 * k + d;
        if (want < 0) want = 0;
        if (want > 1) want = 1;
        o.require(sample_alpha(k, d) == want, "sample_alpha differs from clamp(k/2 + delta)");
    }
    return o;
}

// --- 9: defaults --------------------------------------------------------------

Outcome criterion9() {
    Outcome o;
    const TrainConfig t;
    o.require(t.stages.size() == 2, "expected two training stages");
    if (t.stages.size() == 2) {
        o.require(t.stages[0].freeze_encoder && t.stages[0].epochs == 10 && t.stages[0].learning_rate == 1e-3 &&
                      t.stages[0].batch_size == 16,
                  "first stage is not frozen/10/1e-3/16");
        o.require(!t.stages[1].freeze_encoder && t.stages[1].epochs == 10 && t.stages[1].learning_rate == 1e-5 &&
                      t.stages[1].batch_size == 16,
                  "second stage is not unfrozen/10/1e-5/16");
    }
    o.require(t.optimizer == "adamw", "optimizer is not AdamW");
    const EnhanceConfig e;
    o.require(e.denoising_strength == 0.6, "denoising strength != 0.6");
    o.require(e.guidance_scale == 7.0, "guidance scale != 7");
    o.require(e.sampler == "DPM++ 2M Karras", "sampler differs");
    o.require(e.depth_preprocessor == "depth_midas", "depth preprocessor differs");
    o.require(e.depth_conditioning, "depth conditioning is off");
    o.require(e.negative_prompt ==
                  "out of frame, lowres, text, error, cropped, worst quality, low quality, jpeg artifacts, ugly, "
                  "duplicate, morbid, mutilated, out of frame, extra fingers, mutated hands, poorly drawn hands, "
                  "poorly drawn face, mutation, deformed, blurry, dehydrated, bad anatomy, bad proportions, extra "
                  "limbs, cloned face, disfigured, gross proportions, malformed limbs, missing arms, missing legs, "
                  "extra arms, extra legs, fused fingers, too many fingers, long neck, username, watermark, signature,",
              "negative prompt differs");
    return o;
}

}  // namespace

int main() {
    spdlog::set_level(spdlog::level::warn);
    const fs::path scratch = fs::temp_directory_path() / ("appeal-acceptance-" + std::to_string(::getpid()));
    fs::remove_all(scratch);
    const fs::path dir_a = scratch / "a", dir_b = scratch / "b";

    int failures = 0;
    auto report = [&](int n, const std::string& name, const std::function<Outcome()>& fn, const std::string* note) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        std::string line = (o.pass ? "PASS" : "FAIL") + std::string(" criterion ") + std::to_string(n) + ": " + name;
        if (note && !note->empty()) line += " (" + *note + ")";
        if (!o.pass) line += " -- " + o.detail;
        std::printf("%s\n", line.c_str());
        std::fflush(stdout);
        failures += !o.pass;
    };

    std::string note1;
    report(1, "toy harness SRCC, negative control, runtime", [&] { return criterion1(dir_a, note1); }, &note1);
    report(2, "pair targets and symmetry", criterion2, nullptr);
    report(3, "scale_scores endpoints, order, affine invariance", criterion3, nullptr);
    report(4, "area filter vs pixel count", criterion4, nullptr);
    report(5, "heatmap vs brute force, constant and affine scores", criterion5, nullptr);
    report(6, "mask locality and zero-heatmap identity", criterion6, nullptr);
    report(7, "metrics vs oracle, identity, reversal, monotone invariance", criterion7, nullptr);
    report(8, "blend endpoints and linearity, sample_alpha", criterion8, nullptr);
    report(9, "training and enhancement defaults", criterion9, nullptr);
    report(10, "toy harness reruns are byte-identical", [&] { return criterion10(dir_a, dir_b); }, nullptr);

    fs::remove_all(scratch);
    return failures == 0 ? 0 : 1;
}
