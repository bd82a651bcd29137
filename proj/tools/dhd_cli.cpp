#include <iostream>
#include <string>
#include <vector>

#include "dhd/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dhd::run_command(args, std::cout, std::cerr);
}
