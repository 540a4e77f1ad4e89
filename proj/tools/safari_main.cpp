#include <iostream>
#include <string>
#include <vector>

#include "safari/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return safari::cli::run(args, std::cout, std::cerr);
}
