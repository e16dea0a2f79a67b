#include <iostream>

#include "enarkit/cli.hpp"

int main(int argc, char** argv) { return enarkit::cli::run(argc, argv, std::cout, std::cerr); }
