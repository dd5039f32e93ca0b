#include <iostream>

#include "screenlab/cli.hpp"

int main(int argc, char** argv) { return screenlab::run(argc, argv, std::cout, std::cerr); }
