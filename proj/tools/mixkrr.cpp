#include <iostream>
#include <string>
#include <vector>

#include "mixkrr/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return mixkrr::cli::dispatch(args, std::cout, std::cerr);
}
