#include <iostream>

#include "fbm_cli/cli.hpp"

int main(int argc, char** argv) { return fbm::cli::run_cli(argc, argv, std::cout, std::cerr); }
