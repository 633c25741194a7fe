#include "ccsim/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return ccsim::cli::main(argc, argv, std::cout, std::cerr); }
