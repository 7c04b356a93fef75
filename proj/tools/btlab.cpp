#include <iostream>

#include "btlab/cli.hpp"

int main(int argc, char** argv) { return btlab::cli::run_cli(argc, argv, std::cout, std::cerr); }
