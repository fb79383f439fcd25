#include <iostream>
#include <string>
#include <vector>

#include "hypolab/cli/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return hypolab::cli::run_cli(args, std::cout, std::cerr);
}
