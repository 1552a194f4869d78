// Copyright 2026 The bitedit Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) {
  return bitedit::cli::run({argv + 1, argv + argc}, std::cout, std::cerr);
}
