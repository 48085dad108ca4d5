#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace miest {

namespace detail {
inline std::atomic<int>& thread_cap() {
  static std::atomic<int> cap{0};  // 0 = not set
  return cap;
}
}  // namespace detail

// Process-wide worker cap for the O(N^2) sweeps. Resolution order:
// set_max_threads() > MIEST_THREADS env var > hardware concurrency.
inline void set_max_threads(int k) { detail::thread_cap().store(k > 0 ? k : 0); }

inline int max_threads() {
  if (int cap = detail::thread_cap().load(); cap > 0) return cap;
  if (const char* env = std::getenv("MIEST_THREADS")) {
    if (int k = std::atoi(env); k > 0) return k;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc ? static_cast<int>(hc) : 1;
}

// Runs fn(i) for i in [0, n). Each index must write only to its own output
// slot; under that discipline results do not depend on the worker count.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn, int threads = 0) {
  if (n == 0) return;
  if (threads <= 0) threads = max_threads();
  std::size_t nt = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  if (nt <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  const std::size_t chunk = std::clamp<std::size_t>(n / (nt * 8), 1, 4096);

  auto worker = [&] {
    for (;;) {
      std::size_t begin = next.fetch_add(chunk);
      if (begin >= n) return;
      std::size_t end = std::min(n, begin + chunk);
      try {
        for (std::size_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lk(err_mu);
        if (!err) err = std::current_exception();
        next.store(n);
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(nt - 1);
  for (std::size_t t = 0; t + 1 < nt; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace miest
