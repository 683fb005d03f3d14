#include <iostream>

#include "gridsynth/cli.hpp"

int main(int argc, char** argv) { return gridsynth::cli_dispatch(argc, argv, std::cout, std::cerr); }
