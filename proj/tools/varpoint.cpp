#include <iostream>

#include "varpoint/cli.hpp"

int main(int argc, char** argv) { return varpoint::cli::cli_main(argc, argv, std::cout, std::cerr); }
