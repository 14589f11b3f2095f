//
// molnce - molecular graph grammars and policy optimization
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MOLNCE_CORPUS_H_
#define MOLNCE_CORPUS_H_

#include <istream>
#include <string>
#include <vector>

#include "molnce/molgraph.h"

namespace molnce {

enum class CorpusFormat { kSmiles, kJsonLines };

// One molecule per non-blank line; '#' starts a comment line. Errors are
// rethrown as DataError prefixed with the 1-based line number.
std::vector<OrderedMolGraph> read_corpus(std::istream &in, CorpusFormat format);
std::vector<OrderedMolGraph> load_corpus(const std::string &path,
                                         CorpusFormat format);

}  // namespace molnce

#endif  // MOLNCE_CORPUS_H_
