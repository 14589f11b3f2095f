//
// molnce - molecular graph grammars and policy optimization
// SPDX-License-Identifier: Apache-2.0
//

#include "molnce/fingerprint.h"

#include <algorithm>
#include <bit>
#include <stdexcept>
#include <string>
#include <vector>

#include "molnce/chem.h"
#include "molnce/error.h"
#include "molnce/hashing.h"

namespace molnce {

Fingerprint::Fingerprint(int nbits, int radius)
    : nbits_(nbits), radius_(radius), words_((nbits + 63) / 64, 0) {
  if (nbits <= 0)
    throw std::invalid_argument("fingerprint length must be positive");
  if (radius < 0)
    throw std::invalid_argument("fingerprint radius must be non-negative");
}

void Fingerprint::set(int bit) {
  words_[bit / 64] |= std::uint64_t { 1 } << (bit % 64);
}

bool Fingerprint::test(int bit) const {
  return (words_[bit / 64] >> (bit % 64)) & 1U;
}

int Fingerprint::popcount() const {
  int n = 0;
  for (auto w: words_)
    n += std::popcount(w);
  return n;
}

double tanimoto(const Fingerprint &a, const Fingerprint &b) {
  if (a.nbits_ != b.nbits_) {
    throw LengthMismatch("fingerprint lengths differ: "
                         + std::to_string(a.nbits_) + " vs "
                         + std::to_string(b.nbits_));
  }
  int inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.words_.size(); ++i) {
    inter += std::popcount(a.words_[i] & b.words_[i]);
    uni += std::popcount(a.words_[i] | b.words_[i]);
  }
  if (uni == 0)
    return 1.0;
  return static_cast<double>(inter) / uni;
}

Fingerprint circular_fingerprint(const OrderedMolGraph &g, int radius,
                                 int nbits) {
  using internal::hash_combine;

  Fingerprint fp(nbits, radius);
  const auto n = static_cast<std::size_t>(g.size());
  std::vector<std::uint64_t> inv(n);
  for (NodeId v = 0; v < g.size(); ++v) {
    const NodeLabel &l = g.label(v);
    if (!l.is_terminal())
      throw NonTerminalPresent("fingerprint of a non-terminal graph");
    std::uint64_t h = hash_combine(0, static_cast<std::uint64_t>(l.atom().element));
    h = hash_combine(h, static_cast<std::uint64_t>(l.atom().charge - kMinCharge));
    h = hash_combine(h, static_cast<std::uint64_t>(g.degree(v)));
    h = hash_combine(h, static_cast<std::uint64_t>(bond_order_sum(g, v)));
    inv[v] = h;
  }
  auto mark = [&] {
    for (auto h: inv)
      fp.set(static_cast<int>(h % static_cast<std::uint64_t>(nbits)));
  };
  mark();

  std::vector<std::pair<std::uint64_t, std::uint64_t>> nbrs;
  for (int round = 1; round <= radius; ++round) {
    std::vector<std::uint64_t> next(n);
    for (NodeId v = 0; v < g.size(); ++v) {
      nbrs.clear();
      for (const Incidence &inc: g.incident(v))
        nbrs.emplace_back(inc.label.order_sum(), inv[inc.neighbor]);
      std::sort(nbrs.begin(), nbrs.end());
      std::uint64_t h = hash_combine(static_cast<std::uint64_t>(round), inv[v]);
      for (const auto &[order, nv]: nbrs)
        h = hash_combine(hash_combine(h, order), nv);
      next[v] = h;
    }
    inv = std::move(next);
    mark();
  }
  return fp;
}

}  // namespace molnce
