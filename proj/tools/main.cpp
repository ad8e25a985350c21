#include <iostream>

#include "locrb/cli.hpp"

int main(int argc, char** argv) {
  return locrb::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
