#include <iostream>

#include "glider_assim_cli/cli.hpp"

int main(int argc, char** argv) {
  return glider_assim::cli::run_cli(argc, argv, std::cout, std::cerr);
}
