#include <iostream>

#include "meshtally/harness.hpp"

int main(int argc, char** argv) { return meshtally::run_cli(argc, argv, std::cout, std::cerr); }
