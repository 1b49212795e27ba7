// Copyright 2026 The appeal authors
// SPDX-License-Identifier: Apache-2.0

// Writes a toy image corpus in the mock image-source layout,
// <corpus>/<query-slug>/<rank>.png, for every query of a domain config.
// Positive queries get saturated disks, negative queries washed-out ones.

#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "appeal/domain.hpp"
#include "appeal/error.hpp"
#include "appeal/image.hpp"
#include "appeal/mocks.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Toy corpus for the mock image source", "appeal-democorpus"};
    std::string domain_path, out;
    int per_query = 12, size = 48;
    std::uint64_t seed = 1;
    app.add_option("domain", domain_path, "Domain config (TOML)")->required()->check(CLI::ExistingFile);
    app.add_option("corpus", out, "Output directory")->required();
    app.add_option("--per-query", per_query, "Images per query")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--size", size, "Image side in pixels")->capture_default_str()->check(CLI::Range(8, 4096));
    app.add_option("--seed", seed, "Seed")->capture_default_str();
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return e.get_exit_code() == 0 ? app.exit(e) : (app.exit(e), 64);
    }
    try {
        const auto domain = appeal::load_domain_config(domain_path);
        int written = 0;
        for (const auto& q : appeal::generate_queries(domain)) {
            const auto dir = std::filesystem::path(out) / appeal::slugify(q.text);
            std::filesystem::create_directories(dir);
            appeal::SplitMix rng(appeal::derive_seed(seed, q.text));
            for (int rank = 1; rank <= per_query; ++rank) {
                const double alpha = q.polarity == appeal::Polarity::positive ? rng.uniform(0.6, 1.0) : rng.uniform(0.0, 0.4);
                appeal::write_png(dir / (std::to_string(rank) + ".png"), appeal::mock::toy_scene(size, alpha, rng.next()));
                ++written;
            }
        }
        std::cout << written << " images under " << out << "\n";
        return 0;
    } catch (const appeal::ConfigError& e) {
        std::cerr << "appeal-democorpus: " << e.what() << "\n";
        return 1;
    } catch (const appeal::ValidationError& e) {
        std::cerr << "appeal-democorpus: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "appeal-democorpus: " << e.what() << "\n";
        return 2;
    }
}
