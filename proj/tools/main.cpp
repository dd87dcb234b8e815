#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return rank2s::cli::run(argc, argv, std::cout, std::cerr); }
