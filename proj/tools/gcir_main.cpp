#include <iostream>

#include "gcir/cli.hpp"

int main(int argc, char** argv) { return gcir::cli::run(argc, argv, std::cout, std::cerr); }
