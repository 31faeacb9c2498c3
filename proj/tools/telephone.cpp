#include <iostream>

#include "telephone/cli.hpp"

int main(int argc, char** argv) {
  return telephone::cli::run(argc, argv, std::cout, std::cerr);
}
