#include <iostream>

#include "cli/app.hpp"

int main(int argc, char** argv) {
  return scglove::cli::run_subcommand(argc, argv, std::cout, std::cerr);
}
