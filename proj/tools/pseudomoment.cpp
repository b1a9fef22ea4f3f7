#include <iostream>

#include "pseudomoment/cli.hpp"

int main(int argc, char** argv) {
  return pseudomoment::cli::dispatch(argc, argv, std::cout, std::cerr);
}
