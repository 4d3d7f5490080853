#include <iostream>
#include <string>
#include <vector>

#include "fastwdm/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return fastwdm::cli::run(args, std::cout, std::cerr);
}
