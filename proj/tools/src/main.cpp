#include <iostream>

#include "ropocop/cli/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return ropocop::cli::run(args, std::cout, std::cerr);
}
