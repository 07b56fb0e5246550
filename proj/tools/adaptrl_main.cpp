#include <iostream>
#include <string>
#include <vector>

#include "adaptrl/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return adaptrl::run_cli(args, std::cin, std::cout, std::cerr);
}
