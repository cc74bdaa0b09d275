#include <iostream>
#include <string>
#include <vector>

#include "clinfom/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return clinfom::run_cli(args, std::cout, std::cerr);
}
