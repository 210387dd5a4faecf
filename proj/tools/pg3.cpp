#include "pg3/cli.hpp"

#include <iostream>
#include <string>
#include <vector>

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return pg3::cli::execute(args, std::cout, std::cerr);
}
