// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: 2026 The tracebench Authors

#include <iostream>
#include <string>
#include <vector>

#include "tracebench/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return tracebench::cli::run(std::move(args), std::cout, std::cerr);
}
