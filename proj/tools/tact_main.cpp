#include <vector>

#include "tact/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return tact::cli::dispatch(args);
}
