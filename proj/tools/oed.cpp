#include <iostream>

#include "oed/cli.hpp"

int main(int argc, char** argv) { return oed::cli::run(argc, argv, std::cout, std::cerr); }
