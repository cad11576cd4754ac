#include "gcir/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace gcir::parallel {

namespace {
std::atomic<std::size_t> g_workers{0};
}

void set_workers(std::size_t n) { g_workers.store(n); }

std::size_t workers() {
  const std::size_t n = g_workers.load();
  if (n != 0) return n;
  return std::max(1u, std::thread::hardware_concurrency());
}

void workers_from_env() {
  if (const char* env = std::getenv("GCIR_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) set_workers(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      // ignored: the hint is optional
    }
  }
}

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body) {
  if (n == 0) return;
  // Small jobs are not worth a thread launch.
  const std::size_t w = std::min(workers(), std::max<std::size_t>(1, n / 64));
  if (w <= 1) {
    body(0, n);
    return;
  }
  std::vector<std::thread> threads;
  std::exception_ptr error;
  std::mutex error_mu;
  threads.reserve(w);
  for (std::size_t j = 0; j < w; ++j) {
    const std::size_t b = n * j / w;
    const std::size_t e = n * (j + 1) / w;
    threads.emplace_back([&, b, e] {
      try {
        body(b, e);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t h = v.size() / 2;
  return pairwise_sum(v.first(h)) + pairwise_sum(v.subspan(h));
}

}  // namespace gcir::parallel
