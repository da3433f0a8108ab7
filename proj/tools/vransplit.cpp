#include <iostream>

#include "vransplit/commands.hpp"

int main(int argc, char** argv) { return vransplit::run_cli(argc, argv, std::cout, std::cerr); }
