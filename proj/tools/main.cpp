#include <vector>
#include <string>

#include "qaa/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return qaa::run_command(args);
}
