// Copyright 2026 The appeal authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include "appeal/image.hpp"
#include "appeal/util.hpp"

namespace testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("appeal-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const noexcept { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline appeal::Image random_image(int w, int h, appeal::SplitMix& rng) {
    appeal::Image img(w, h);
    for (auto& b : img.bytes()) b = static_cast<std::uint8_t>(rng.below(256));
    return img;
}

/// Random binary mask with roughly `density` ones.
inline appeal::ScalarField random_mask(int w, int h, double density, appeal::SplitMix& rng) {
    appeal::ScalarField m(w, h);
    for (auto& v : m.values()) v = rng.uniform() < density ? 1.0 : 0.0;
    return m;
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace testing
