#include <iostream>

#include "hmmifs/cli.hpp"

int main(int argc, char** argv) { return hmmifs::cli::run(argc, argv, std::cout, std::cerr); }
