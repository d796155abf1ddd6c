#include <iostream>

#include "eyeheat/cli.hpp"

int main(int argc, char** argv) {
  return eyeheat::cli::run({argv + 1, argv + argc}, std::cout, std::cerr);
}
