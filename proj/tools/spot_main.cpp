#include <iostream>

#include "spot/cli/cli.hpp"

int main(int argc, char** argv) {
  return spot::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
