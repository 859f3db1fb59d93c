#include <iostream>
#include <string>
#include <vector>

#include "fermiload/cli/app.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return fermiload::cli::run_cli(args, std::cout, std::cerr);
}
