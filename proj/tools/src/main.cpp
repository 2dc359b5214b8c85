#include <iostream>

#include "shrinkglht_cli/commands.hpp"

int main(int argc, char** argv) { return shrinkglht::cli::run(argc, argv, std::cout, std::cerr); }
