// Copyright (c) szbf contributors.
// SPDX-License-Identifier: MIT

#include <string>
#include <vector>

#include "szbf/cli.hpp"

int main(int argc, char** argv) {
    return szbf::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
