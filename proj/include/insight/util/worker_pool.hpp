#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <optional>
#include <thread>
#include <type_traits>
#include <vector>

namespace insight::util {

// Runs fn(i) for i in [0, count) on up to `workers` threads. Each index runs
// exactly once; failures are captured per index and never cancel siblings.
template <class Fn>
std::vector<std::exception_ptr> run_indexed(std::size_t workers, std::size_t count, Fn&& fn) {
  std::vector<std::exception_ptr> errors(count);
  if (count == 0) return errors;
  workers = std::clamp<std::size_t>(workers, 1, count);
  std::atomic<std::size_t> next{0};
  auto drain = [&] {
    for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    drain();
    return errors;
  }
  std::vector<std::jthread> threads;
  threads.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) threads.emplace_back(drain);
  drain();
  threads.clear();
  return errors;
}

// Ordered map over [0, count). Rethrows the lowest-index failure after every
// task has finished.
template <class Fn>
auto parallel_map(std::size_t workers, std::size_t count, Fn&& fn)
    -> std::vector<std::invoke_result_t<Fn&, std::size_t>> {
  using T = std::invoke_result_t<Fn&, std::size_t>;
  std::vector<std::optional<T>> slots(count);
  auto errors = run_indexed(workers, count, [&](std::size_t i) { slots[i].emplace(fn(i)); });
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<T> out;
  out.reserve(count);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace insight::util
