#include <iostream>

#include "cheaptalk/cli.hpp"

int main(int argc, char** argv) { return cheaptalk::cli::main(argc, argv, std::cout, std::cerr); }
