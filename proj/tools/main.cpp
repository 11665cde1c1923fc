#include "commands.hpp"

#include <iostream>

int main(int argc, char** argv) { return sawfilm::cli::run(argc, argv, std::cout, std::cerr); }
