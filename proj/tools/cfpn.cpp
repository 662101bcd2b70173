#include <iostream>

#include "cfpn/cli.hpp"

int main(int argc, char** argv) {
  return cfpn::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
