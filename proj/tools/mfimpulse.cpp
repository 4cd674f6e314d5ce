#include <iostream>

#include "mfimpulse/cli.hpp"

int main(int argc, char** argv) { return mfimpulse::run_cli(argc, argv, std::cout, std::cerr); }
