#include "elastoflow/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return elastoflow::cli::run(argc, argv, std::cout, std::cerr); }
