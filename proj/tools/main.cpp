#include <iostream>
#include <string>
#include <vector>

#include "dmvcr/cli.hpp"

int main(int argc, char** argv) {
  return dmvcr::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
