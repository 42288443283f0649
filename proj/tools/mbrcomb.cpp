#include <iostream>

#include "mbrcomb/cli.hpp"

int main(int argc, char** argv) { return mbrcomb::cli::run(argc, argv, std::cout, std::cerr); }
