#include "cascadeprune/parallel.hpp"

#include <algorithm>
#include <thread>
#include <vector>

namespace cascadeprune {

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(int n, int threads, const std::function<void(int, int)>& body) {
  if (n <= 0) return;
  const int k = std::min(resolve_threads(threads), n);
  if (k <= 1) {
    body(0, n);
    return;
  }
  std::vector<std::thread> workers;
  workers.reserve(k);
  const int chunk = (n + k - 1) / k;
  for (int w = 0; w < k; ++w) {
    const int begin = w * chunk;
    const int end = std::min(n, begin + chunk);
    if (begin >= end) break;
    workers.emplace_back([&body, begin, end] { body(begin, end); });
  }
  for (auto& t : workers) t.join();
}

}  // namespace cascadeprune
