#include "hddr/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return hddr::run_cli(argc, argv, std::cout, std::cerr); }
