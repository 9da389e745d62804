#include <iostream>

#include "maternfit/cli/commands.hpp"

int main(int argc, char** argv) { return maternfit::cli::run(argc, argv, std::cout, std::cerr); }
