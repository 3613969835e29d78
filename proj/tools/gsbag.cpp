#include <iostream>
#include <string>
#include <vector>

#include "gsbag/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return gsbag::run_cli(args, std::cout, std::cerr);
}
