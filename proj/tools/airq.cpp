#include <iostream>

#include "airq/cli.hpp"

int main(int argc, char** argv) { return airq::cli::run(argc, argv, std::cout, std::cerr); }
