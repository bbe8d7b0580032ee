#include <string>
#include <vector>

#include "vafusion/cli/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return vaf::run_cli(args);
}
