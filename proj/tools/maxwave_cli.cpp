#include <iostream>
#include <string>
#include <vector>

#include "maxwave/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return maxwave::run_cli(args, std::cout, std::cerr);
}
