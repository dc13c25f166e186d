#include <iostream>

#include "gw/cli.hpp"

int main(int argc, char** argv) { return gw::cli::run(argc, argv, std::cout, std::cerr); }
