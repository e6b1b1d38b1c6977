#include <iostream>

#include "statepi/cli.hpp"

int main(int argc, char** argv) { return spi::run_cli(argc, argv, std::cout, std::cerr); }
