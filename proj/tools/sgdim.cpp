#include <iostream>

#include "sgdim/cli.hpp"

int main(int argc, char** argv) { return sgdim::cli::run(argc, argv, std::cout, std::cerr); }
