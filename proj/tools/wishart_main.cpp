#include <iostream>

#include "wishart/cli.hpp"

int main(int argc, char** argv) { return wishart::run_cli(argc, argv, std::cout, std::cerr); }
