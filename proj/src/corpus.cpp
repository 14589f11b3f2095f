//
// molnce - molecular graph grammars and policy optimization
// SPDX-License-Identifier: Apache-2.0
//

#include "molnce/corpus.h"

#include <fstream>

#include <nlohmann/json.hpp>

#include "molnce/error.h"
#include "molnce/graph_json.h"
#include "molnce/smiles.h"

namespace molnce {

std::vector<OrderedMolGraph> read_corpus(std::istream &in, CorpusFormat format) {
  std::vector<OrderedMolGraph> out;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    std::size_t start = line.find_first_not_of(" \t");
    if (start == std::string::npos || line[start] == '#')
      continue;
    std::size_t end = line.find_last_not_of(" \t");
    std::string text = line.substr(start, end - start + 1);
    try {
      if (format == CorpusFormat::kSmiles)  // trailing columns are names
        out.push_back(parse_smiles(text.substr(0, text.find_first_of(" \t"))));
      else
        out.push_back(graph_from_json(nlohmann::json::parse(text)));
    } catch (const nlohmann::json::exception &e) {
      throw DataError("line " + std::to_string(number) + ": " + e.what());
    } catch (const Error &e) {
      throw DataError("line " + std::to_string(number) + ": " + e.what());
    }
  }
  return out;
}

std::vector<OrderedMolGraph> load_corpus(const std::string &path,
                                         CorpusFormat format) {
  std::ifstream in(path);
  if (!in)
    throw DataError("cannot open corpus '" + path + "'");
  return read_corpus(in, format);
}

}  // namespace molnce
