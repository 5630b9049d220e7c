#include <iostream>
#include <string>
#include <vector>

#include "stablegrad/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return stablegrad::cli::run(args, std::cout, std::cerr);
}
