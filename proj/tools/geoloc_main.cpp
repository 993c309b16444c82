#include <iostream>
#include <string>
#include <vector>

#include "geoloc/cli.hpp"

int main(int argc, char** argv) {
  return geoloc::run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
