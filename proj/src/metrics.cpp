// Copyright 2026 The appeal authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "appeal/eval.hpp"

namespace appeal {

json to_json(const MetricReport& m) {
    return json{{"plcc", m.plcc}, {"srcc", m.srcc}, {"krcc", m.krcc}, {"rmse", m.rmse}, {"mae", m.mae}, {"n", m.n}};
}

namespace {

void check_inputs(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("correlation inputs differ in length");
    if (x.size() < 2) throw std::invalid_argument("correlations need at least two samples");
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw std::invalid_argument("non-finite value in correlation input");
}

// Counts pairs tied in the already-sorted key.
std::int64_t tied_pairs(std::span<const double> sorted) {
    std::int64_t total = 0, run = 1;
    for (std::size_t i = 1; i <= sorted.size(); ++i) {
        if (i < sorted.size() && sorted[i] == sorted[i - 1]) {
            ++run;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    return total;
}

std::int64_t merge_count(std::vector<double>& v, std::vector<double>& tmp, std::size_t lo, std::size_t hi) {
    if (hi - lo < 2) return 0;
    const std::size_t mid = lo + (hi - lo) / 2;
    std::int64_t swaps = merge_count(v, tmp, lo, mid) + merge_count(v, tmp, mid, hi);
    std::size_t i = lo, j = mid, k = lo;
    while (i < mid && j < hi) {
        if (v[j] < v[i]) {
            swaps += static_cast<std::int64_t>(mid - i);
            tmp[k++] = v[j++];
        } else {
            tmp[k++] = v[i++];
        }
    }
    while (i < mid) tmp[k++] = v[i++];
    while (j < hi) tmp[k++] = v[j++];
    std::copy(tmp.begin() + static_cast<std::ptrdiff_t>(lo), tmp.begin() + static_cast<std::ptrdiff_t>(hi),
              v.begin() + static_cast<std::ptrdiff_t>(lo));
    return swaps;
}

}  // namespace

std::vector<double> average_ranks(std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
        i = j + 1;
    }
    return ranks;
}

double pearson(std::span<const double> x, std::span<const double> y) {
    check_inputs(x, y);
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) throw std::domain_error("correlation undefined: zero variance input");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman(std::span<const double> x, std::span<const double> y) {
    check_inputs(x, y);
    const auto rx = average_ranks(x), ry = average_ranks(y);
    return pearson(rx, ry);
}

double kendall_tau_b(std::span<const double> x, std::span<const double> y) {
    check_inputs(x, y);
    const std::size_t n = x.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return x[a] != x[b] ? x[a] < x[b] : y[a] < y[b];
    });
    std::vector<double> xs(n), ys(n);
    for (std::size_t i = 0; i < n; ++i) {
        xs[i] = x[idx[i]];
        ys[i] = y[idx[i]];
    }
    const std::int64_t n0 = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n - 1) / 2;
    const std::int64_t n1 = tied_pairs(xs);
    std::int64_t n3 = 0;  // tied in both
    for (std::size_t i = 1, run = 1; i <= n; ++i) {
        if (i < n && xs[i] == xs[i - 1] && ys[i] == ys[i - 1]) {
            ++run;
        } else {
            n3 += static_cast<std::int64_t>(run * (run - 1) / 2);
            run = 1;
        }
    }
    std::vector<double> tmp(n);
    const std::int64_t swaps = merge_count(ys, tmp, 0, n);
    const std::int64_t n2 = tied_pairs(ys);
    if (n0 == n1 || n0 == n2) throw std::domain_error("correlation undefined: zero variance input");
    const double num = static_cast<double>(n0 - n1 - n2 + n3 - 2 * swaps);
    return std::clamp(num / std::sqrt(static_cast<double>(n0 - n1) * static_cast<double>(n0 - n2)), -1.0, 1.0);
}

MetricReport correlations(std::span<const double> x, std::span<const double> y) {
    check_inputs(x, y);
    MetricReport m;
    m.n = x.size();
    m.plcc = pearson(x, y);
    m.srcc = spearman(x, y);
    m.krcc = kendall_tau_b(x, y);
    double se = 0.0, ae = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        se += (x[i] - y[i]) * (x[i] - y[i]);
        ae += std::abs(x[i] - y[i]);
    }
    m.rmse = std::sqrt(se / static_cast<double>(m.n));
    m.mae = ae / static_cast<double>(m.n);
    return m;
}

std::string format_metric_table(const MetricReport& m, std::string_view row_label) {
    std::ostringstream os;
    os << std::left << std::setw(16) << "" << std::right;
    for (const char* h : {"PLCC", "SRCC", "KRCC", "RMSE", "MAE", "n"}) os << std::setw(10) << h;
    os << "\n" << std::left << std::setw(16) << row_label << std::right << std::fixed << std::setprecision(4);
    for (double v : {m.plcc, m.srcc, m.krcc, m.rmse, m.mae}) os << std::setw(10) << v;
    os << std::setw(10) << m.n << "\n";
    return os.str();
}

}  // namespace appeal
