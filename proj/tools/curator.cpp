#include "curator/cli/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return curator::cli::run(argc, argv, std::cout, std::cerr); }
