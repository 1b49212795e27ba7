// Copyright 2026 The appeal authors
// SPDX-License-Identifier: Apache-2.0

// Converts a WordNet dict directory into the compact lexicon TSV shipped in data/.

#include <iostream>

#include "appeal/lexicon.hpp"

int main(int argc, char** argv) {
    if (argc != 3) {
        std::cerr << "usage: appeal-lexicon <wordnet-dict-dir> <out.tsv>\n";
        return 64;
    }
    try {
        const auto lex = appeal::Lexicon::load(argv[1]);
        lex.write_compact(argv[2]);
        std::cout << lex.size() << " lemmas\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
