// Copyright 2026 The appeal authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace appeal {

using json = nlohmann::json;

// --- seeds -------------------------------------------------------------------

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// FNV-1a 64; stable across platforms, used to fold string keys into seeds.
constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Derives an independent stream seed from a run seed and a textual key.
constexpr std::uint64_t derive_seed(std::uint64_t run_seed, std::string_view key) noexcept {
    return splitmix64(run_seed ^ splitmix64(fnv1a(key)));
}

/// Maps 64 random bits to [0,1) with 53-bit resolution.
constexpr double unit_double(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Small counter-based generator; portable, unlike std:: distributions.
class SplitMix {
public:
    explicit SplitMix(std::uint64_t seed) noexcept : state_(seed) {}
    std::uint64_t next() noexcept { return splitmix64(state_++ * 0x9e3779b97f4a7c15ULL + 1); }
    double uniform() noexcept { return unit_double(next()); }
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) noexcept { return n == 0 ? 0 : next() % n; }
    /// Box-Muller standard normal.
    double normal() noexcept;

    template <class T>
    void shuffle(std::vector<T>& v) noexcept {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
};

// --- JSONL -------------------------------------------------------------------

std::vector<json> read_jsonl(const std::filesystem::path& path);

/// Writes all rows to a temp file then renames over `path`.
void write_jsonl_atomic(const std::filesystem::path& path, const std::vector<json>& rows);

void write_json_atomic(const std::filesystem::path& path, const json& value);
json read_json(const std::filesystem::path& path);

/// Append-only JSONL writer; each row is written with a single write call.
class JsonlAppender {
public:
    explicit JsonlAppender(std::filesystem::path path);
    void append(const json& row);
    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
    std::mutex mu_;
};

/// Lowercase, spaces and underscores become '-', other non-alphanumerics dropped.
std::string slugify(std::string_view text);

std::string trim(std::string_view s);

}  // namespace appeal
