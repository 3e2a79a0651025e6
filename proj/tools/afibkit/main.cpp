#include <iostream>

#include "afibkit/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return afibkit::cli::dispatch(args, std::cout, std::cerr);
}
