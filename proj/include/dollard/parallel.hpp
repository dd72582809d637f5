#pragma once
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace dollard {

//! Worker count from DOLLARD_WORKERS, falling back to 1.
inline std::size_t default_workers() {
  if (const char *env = std::getenv("DOLLARD_WORKERS")) {
    try {
      const auto v = std::stoul(env);
      if (v > 0)
        return v;
    } catch (...) {
    }
  }
  return 1;
}

//! Evaluates f(0..count-1) on up to `workers` threads. Results come back in
//! index order regardless of completion order. If any call throws, the
//! exception of the lowest failing index is rethrown after all workers join.
template <class F>
auto parallel_map(std::size_t count, std::size_t workers, F &&f)
    -> std::vector<decltype(f(std::size_t{}))> {
  using R = decltype(f(std::size_t{}));
  std::vector<std::optional<R>> slots(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        slots[i].emplace(f(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto nthreads = std::min(std::max<std::size_t>(workers, 1), count);
  if (nthreads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < nthreads; ++t)
      pool.emplace_back(work);
    for (auto &t : pool)
      t.join();
  }
  for (auto &e : errors)
    if (e)
      std::rethrow_exception(e);
  std::vector<R> out;
  out.reserve(count);
  for (auto &s : slots)
    out.push_back(std::move(*s));
  return out;
}

} // namespace dollard
