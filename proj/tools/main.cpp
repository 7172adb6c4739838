#include <iostream>

#include "biascal/cli.hpp"

int main(int argc, char** argv) { return biascal::run_cli(argc, argv, std::cout, std::cerr); }
