#include "drq/core/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace drq {
namespace {
std::atomic<std::size_t> g_threads{1};
std::atomic<bool> g_reproducible{false};
}  // namespace

void set_num_threads(std::size_t n) { g_threads = std::max<std::size_t>(1, n); }
std::size_t num_threads() { return g_reproducible ? 1 : g_threads.load(); }
void set_reproducible(bool on) { g_reproducible = on; }
bool reproducible() { return g_reproducible; }

std::size_t chunk_count(std::size_t n) { return std::max<std::size_t>(1, std::min(n, num_threads())); }

void parallel_for_chunks(std::size_t n,
                         const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
  if (n == 0) return;
  const std::size_t workers = chunk_count(n);
  if (workers == 1) {
    fn(0, n, 0);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  const std::size_t base = n / workers;
  const std::size_t extra = n % workers;
  std::size_t begin = 0;
  std::size_t first_end = 0;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t end = begin + base + (w < extra ? 1 : 0);
    if (w == 0) {
      first_end = end;
    } else {
      pool.emplace_back(fn, begin, end, w);
    }
    begin = end;
  }
  fn(0, first_end, 0);
  for (auto& t : pool) t.join();
}

}  // namespace drq
