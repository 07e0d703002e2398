#include <iostream>

#include "rfb/cli.hpp"

int main(int argc, char** argv) { return rfb::run_cli(argc, argv, std::cout, std::cerr); }
