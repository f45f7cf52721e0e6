#include <iostream>
#include <string>
#include <vector>

#include "risu/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  return risu::cli::run(args, std::cout, std::cerr);
}
