#include <iostream>

#include "iso_cli/commands.hpp"

int main(int argc, char** argv) {
  return iso::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
