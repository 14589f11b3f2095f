//
// molnce - molecular graph grammars and policy optimization
// SPDX-License-Identifier: Apache-2.0
//

// Reference evaluator for the line protocol: reads one SMILES per line and
// answers its heavy-atom count divided by ten. With --log, every received
// line is appended to the given file.

#include <fstream>
#include <iostream>
#include <string>

#include "molnce/smiles.h"

int main(int argc, char **argv) {
  std::ofstream log;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--log" && i + 1 < argc) {
      log.open(argv[++i], std::ios::app);
    } else {
      std::cerr << "usage: toy_evaluator [--log FILE]\n";
      return 1;
    }
  }
  std::string line;
  while (std::getline(std::cin, line)) {
    if (log.is_open())
      log << line << std::endl;
    try {
      std::cout << molnce::parse_smiles(line).size() / 10.0 << std::endl;
    } catch (const std::exception &e) {
      std::cerr << "toy_evaluator: " << e.what() << "\n";
      std::cout << "error" << std::endl;
    }
  }
  return 0;
}
