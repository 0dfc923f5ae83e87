#include <unistd.h>

#include <iostream>
#include <string>
#include <vector>

#include "etsf_kit.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  const auto style = etsf::kit::style_from_environment(isatty(STDOUT_FILENO) != 0);
  return etsf::kit::run(args, std::cout, std::cerr, style);
}
