#pragma once

#include <cstdint>
#include <cstdlib>
#include <future>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace forge {

// Bad input data: malformed files, asymmetric tables, nonzero diagonals.
// CLI maps this to exit code 2.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input was well-formed but a construction cannot proceed (e.g. required
// depth exceeds the supported range).  CLI maps this to exit code 3.
struct ConstructionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Worker count for the few data-parallel loops.  Reads FORGE_THREADS once;
// defaults to 1 so single-core environments never oversubscribe.
inline int thread_count() {
  static const int n = [] {
    const char* env = std::getenv("FORGE_THREADS");
    if (!env) return 1;
    int v = std::atoi(env);
    if (v < 1) return 1;
    if (v > 8) return 8;
    return v;
  }();
  return n;
}

// Splits [0, n) into contiguous chunks, runs fn(begin, end) on each, and
// returns the per-chunk results in index order so merges stay deterministic.
template <typename Fn>
auto parallel_chunks(std::size_t n, Fn&& fn)
    -> std::vector<std::invoke_result_t<Fn&, std::size_t, std::size_t>> {
  using R = std::invoke_result_t<Fn&, std::size_t, std::size_t>;
  const int workers = thread_count();
  std::vector<R> out;
  if (workers <= 1 || n < 2) {
    out.push_back(fn(std::size_t{0}, n));
    return out;
  }
  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::future<R>> futs;
  for (std::size_t b = 0; b < n; b += chunk) {
    const std::size_t e = b + chunk < n ? b + chunk : n;
    futs.push_back(std::async(std::launch::async, [&fn, b, e] { return fn(b, e); }));
  }
  for (auto& f : futs) out.push_back(f.get());
  return out;
}

// FNV-1a, used to fingerprint input bytes in certificates.
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace forge
