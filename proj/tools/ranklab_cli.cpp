#include <iostream>

#include "ranklab/cli_app.hpp"

int main(int argc, char** argv) { return ranklab::cli_main(argc, argv, std::cout, std::cerr); }
