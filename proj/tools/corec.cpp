#include <iostream>
#include <string>
#include <vector>

#include "corec/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return corec::run_cli(args, std::cout, std::cerr);
}
