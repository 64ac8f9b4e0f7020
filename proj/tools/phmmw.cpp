#include <iostream>

#include "phmmw/cli.hpp"

int main(int argc, char** argv) { return phmmw::run_cli(argc, argv, std::cout, std::cerr); }
