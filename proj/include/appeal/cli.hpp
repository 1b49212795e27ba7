// Copyright 2026 The appeal authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>

namespace appeal::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitStage = 2;
inline constexpr int kExitUsage = 64;

/// Runs one `appeal` subcommand. Results go to `out`, usage text and
/// diagnostics to `err`.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace appeal::cli
