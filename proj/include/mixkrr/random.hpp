#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <random>
#include <thread>
#include <vector>

namespace mixkrr {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Order-sensitive 64-bit mix of a key tuple; used for per-cell and
/// per-trial seeds so grids can grow without disturbing existing cells.
constexpr std::uint64_t mix_seed(std::initializer_list<std::uint64_t> keys) noexcept {
  std::uint64_t h = 0x6a09e667f3bcc909ULL;
  for (auto k : keys) h = splitmix64(h ^ splitmix64(k));
  return h;
}

/// Runs body(i) for i in [0, count) on up to `jobs` threads. Each index is
/// visited exactly once; callers write results into per-index slots so the
/// outcome is independent of scheduling.
inline void parallel_for(std::size_t count, unsigned jobs,
                         const std::function<void(std::size_t)>& body) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(count)));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(jobs);
  {
    std::vector<std::jthread> workers;
    for (unsigned w = 0; w < jobs; ++w) {
      workers.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < count; i += jobs) body(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace mixkrr
