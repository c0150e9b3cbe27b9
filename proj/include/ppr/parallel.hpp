#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <string>
#include <thread>
#include <vector>

#include "ppr/errors.hpp"

namespace ppr {

// A task failed inside parallel_for; index is the failing item.
class WorkerError : public Error {
 public:
  WorkerError(std::size_t index, const std::string& what)
      : Error("worker failed at index " + std::to_string(index) + ": " + what), index_(index) {}
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

unsigned default_workers();

// Runs body(i) for i in [0, n) on up to `workers` threads. Each index is
// processed exactly once and results must be written by index, so the
// outcome never depends on the worker count. The failure with the lowest
// index is rethrown as WorkerError after all threads join.
template <class Body>
void parallel_for(std::size_t n, unsigned workers, Body&& body) {
  if (n == 0) return;
  std::vector<std::exception_ptr> errors(n);
  auto run_one = [&](std::size_t i) {
    try {
      body(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const std::size_t threads = std::min<std::size_t>(workers == 0 ? 1 : workers, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) run_one(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const WorkerError&) {
      throw;
    } catch (const std::exception& e) {
      throw WorkerError(i, e.what());
    } catch (...) {
      throw WorkerError(i, "unknown exception");
    }
  }
}

}  // namespace ppr
