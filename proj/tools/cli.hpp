// Copyright 2026 The bitedit Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line entry point. Exit codes: 0 success, 1 usage, 2 validation,
// 3 I/O.

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bitedit::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitIo = 3;

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace bitedit::cli
