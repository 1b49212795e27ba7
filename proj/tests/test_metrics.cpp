// Copyright 2026 The appeal authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "appeal/eval.hpp"
#include "appeal/util.hpp"

using namespace appeal;

namespace {

long double oracle_pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const auto n = static_cast<long double>(x.size());
    long double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    long double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

std::vector<double> oracle_ranks(const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        int less = 0, equal = 0;
        for (double w : v) {
            less += w < v[i];
            equal += w == v[i];
        }
        r[i] = 1.0 + less + (equal - 1) / 2.0;
    }
    return r;
}

long double oracle_kendall(const std::vector<double>& x, const std::vector<double>& y) {
    long long c = 0, d = 0, tx = 0, ty = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = i + 1; j < x.size(); ++j) {
            const double dx = x[i] - x[j], dy = y[i] - y[j];
            if (dx == 0 && dy == 0) continue;
            if (dx == 0) ++tx;
            else if (dy == 0) ++ty;
            else if ((dx > 0) == (dy > 0)) ++c;
            else ++d;
        }
    return static_cast<long double>(c - d) / std::sqrt(static_cast<long double>(c + d + tx) * (c + d + ty));
}

/// Pairs drawn with deliberate ties so tau-b's correction matters.
std::pair<std::vector<double>, std::vector<double>> random_pair(SplitMix& rng) {
    const std::size_t n = 3 + rng.below(120);
    std::vector<double> x(n), y(n);
    const bool ties = rng.below(2) == 0;
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = ties ? static_cast<double>(rng.below(6)) : rng.normal();
        y[i] = 0.5 * x[i] + (ties ? static_cast<double>(rng.below(4)) : rng.normal());
    }
    return {x, y};
}

}  // namespace

TEST_CASE("metrics match brute-force oracles on 100 random pairs") {
    SplitMix rng(100);
    int tested = 0;
    while (tested < 100) {
        auto [x, y] = random_pair(rng);
        if (*std::min_element(x.begin(), x.end()) == *std::max_element(x.begin(), x.end())) continue;
        if (*std::min_element(y.begin(), y.end()) == *std::max_element(y.begin(), y.end())) continue;
        const MetricReport m = correlations(x, y);
        CHECK(std::abs(m.plcc - static_cast<double>(oracle_pearson(x, y))) <= 1e-9);
        CHECK(std::abs(m.srcc - static_cast<double>(oracle_pearson(oracle_ranks(x), oracle_ranks(y)))) <= 1e-9);
        CHECK(std::abs(m.krcc - static_cast<double>(oracle_kendall(x, y))) <= 1e-9);
        long double se = 0, ae = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            se += (x[i] - y[i]) * (x[i] - y[i]);
            ae += std::abs(x[i] - y[i]);
        }
        CHECK(std::abs(m.rmse - static_cast<double>(std::sqrt(se / x.size()))) <= 1e-9);
        CHECK(std::abs(m.mae - static_cast<double>(ae / x.size())) <= 1e-9);
        CHECK(m.n == x.size());
        CHECK(average_ranks(x) == oracle_ranks(x));
        ++tested;
    }
}

TEST_CASE("identity gives (1, 1, 1, 0) and reversal gives -1") {
    SplitMix rng(5);
    std::vector<double> x(200), r(200);
    for (auto& v : x) v = rng.uniform(1, 10);
    const MetricReport m = correlations(x, x);
    CHECK(m.plcc == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.srcc == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.krcc == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.rmse == 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) r[i] = -x[i];
    const MetricReport rev = correlations(x, r);
    CHECK(rev.srcc == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(rev.krcc == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("rank metrics are invariant under strictly monotone transforms") {
    SplitMix rng(6);
    for (int t = 0; t < 50; ++t) {
        auto [x, y] = random_pair(rng);
        if (*std::min_element(x.begin(), x.end()) == *std::max_element(x.begin(), x.end())) continue;
        if (*std::min_element(y.begin(), y.end()) == *std::max_element(y.begin(), y.end())) continue;
        std::vector<double> fx(x.size()), gy(y.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            fx[i] = std::exp(x[i]);
            gy[i] = y[i] * y[i] * y[i] + 2 * y[i];
        }
        CHECK(spearman(fx, gy) == doctest::Approx(spearman(x, y)).epsilon(1e-12));
        CHECK(kendall_tau_b(fx, gy) == doctest::Approx(kendall_tau_b(x, y)).epsilon(1e-12));
    }
}

TEST_CASE("degenerate inputs raise") {
    const std::vector<double> c{1, 1, 1}, v{1, 2, 3};
    CHECK_THROWS_AS(correlations(c, v), std::domain_error);
    CHECK_THROWS_AS(correlations(v, c), std::domain_error);
    CHECK_THROWS_AS(correlations(v, std::vector<double>{1, 2}), std::invalid_argument);
    CHECK_THROWS_AS(correlations(std::vector<double>{1}, std::vector<double>{1}), std::invalid_argument);
}

TEST_CASE("report json and table") {
    const std::vector<double> x{1, 2, 3, 4}, y{1, 3, 2, 4};
    const MetricReport m = correlations(x, y);
    const json j = to_json(m);
    CHECK(j.at("srcc").get<double>() == m.srcc);
    CHECK(j.at("n").get<std::size_t>() == 4);
    const std::string table = format_metric_table(m, "demo");
    CHECK(table.find("SRCC") != std::string::npos);
    CHECK(table.find("demo") != std::string::npos);
}
