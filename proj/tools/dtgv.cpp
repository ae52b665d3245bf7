#include <iostream>
#include <string>
#include <vector>

#include "dtgv/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return dtgv::cli::run(args, std::cout, std::cerr);
}
