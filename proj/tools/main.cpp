#include <vector>

#include "bisense/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return bisense::run_cli(args);
}
