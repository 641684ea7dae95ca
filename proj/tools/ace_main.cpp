#include <iostream>

#include "ace/cli.hpp"

int main(int argc, char** argv) { return ace::cli::dispatch(argc, argv, std::cout, std::cerr); }
