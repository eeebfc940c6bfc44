#include <iostream>
#include <string>
#include <vector>

#include "econ/app.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return econ::RunApp(args, std::cout, std::cerr);
}
