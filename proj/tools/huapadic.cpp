#include <iostream>

#include "huapadic/cli.hpp"

int main(int argc, char** argv) { return huapadic::cli::run_cli(argc, argv, std::cout, std::cerr, std::cin); }
