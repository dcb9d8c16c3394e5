// Writes the bundled airfoil-shaped stand-in table.
#include <iostream>
#include <string>

#include "selreg/data.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: selreg_make_standin OUT.csv\n";
    return 1;
  }
  try {
    selreg::write_csv(argv[1], selreg::generate_airfoil_standin(), selreg::airfoil_standin_header());
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return 1;
  }
  return 0;
}
