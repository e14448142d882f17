#include <iostream>

#include "mmdhd/cli.hpp"

int main(int argc, char** argv) { return mmdhd::cli::dispatch(argc, argv, std::cout, std::cerr); }
