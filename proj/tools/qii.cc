#include <iostream>

#include "qii/cli.h"

int main(int argc, char **argv) {
  return qii::run_cli(argc, argv, std::cin, std::cout, std::cerr);
}
