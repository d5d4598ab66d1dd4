#include <iostream>

#include "augsum/cli.hpp"

int main(int argc, char** argv) { return augsum::run_cli(argc, argv, std::cout, std::cerr); }
