#include <iostream>

#include "vads/cli/cli.hpp"

int main(int argc, char** argv) { return vads::cli::run(argc, argv, std::cout, std::cerr); }
