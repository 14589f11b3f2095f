//
// molnce - molecular graph grammars and policy optimization
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MOLNCE_PARALLEL_H_
#define MOLNCE_PARALLEL_H_

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace molnce {

// Runs body(i) for i in [0, n) on up to `threads` workers. The exception of
// the lowest failing index is rethrown.
template <class Body>
void parallel_for(int n, int threads, Body &&body) {
  threads = std::clamp(threads, 1, std::max(n, 1));
  if (threads == 1) {
    for (int i = 0; i < n; ++i)
      body(i);
    return;
  }
  std::atomic<int> next { 0 };
  std::vector<std::exception_ptr> errors(n);
  auto worker = [&]() {
    for (int i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back(worker);
  for (std::thread &t: pool)
    t.join();
  for (const std::exception_ptr &e: errors)
    if (e)
      std::rethrow_exception(e);
}

}  // namespace molnce

#endif  // MOLNCE_PARALLEL_H_
