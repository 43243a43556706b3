#include "giht/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return giht::cli::run_cli(argc, argv, std::cout, std::cerr); }
