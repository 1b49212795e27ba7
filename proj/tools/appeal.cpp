// Copyright 2026 The appeal authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "appeal/cli.hpp"

int main(int argc, char** argv) { return appeal::cli::dispatch(argc, argv, std::cout, std::cerr); }
