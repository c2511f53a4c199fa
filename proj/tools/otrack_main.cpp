// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "otrack/app/commands.hpp"

int main(int argc, char** argv) {
    return otrack::app::run_cli(argc, argv, std::cout, std::cerr);
}
