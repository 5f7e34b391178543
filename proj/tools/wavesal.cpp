#include <iostream>

#include "wavesal/cli.hpp"

int main(int argc, char** argv) {
  return wavesal::run_cli(argc, argv, std::cout, std::cerr);
}
