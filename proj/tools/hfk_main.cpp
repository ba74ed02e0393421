#include <iostream>

#include "hfk/cli.hpp"

int main(int argc, char** argv) { return hfk::cli::run(argc, argv, std::cout, std::cerr); }
