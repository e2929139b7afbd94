#include <iostream>

#include "lobnet/cli.hpp"

int main(int argc, char** argv) { return lobnet::run_cli(argc, argv, std::cout, std::cerr); }
