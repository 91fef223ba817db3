#include <iostream>
#include <string>
#include <vector>

#include "pws/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return pws::run_cli(args, std::cout, std::cerr);
}
