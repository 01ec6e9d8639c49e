#include <iostream>

#include "iwek/cli.hpp"

int main(int argc, char** argv) { return iwek::run_cli(argc, argv, std::cout, std::cerr); }
