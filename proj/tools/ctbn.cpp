#include <iostream>
#include <string>
#include <vector>

#include "ctbn/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return ctbn::run_cli(args, std::cout, std::cerr);
}
