#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

namespace exitdim {

using Id = std::int32_t;

// Thrown for invalid parameters / inconsistent inputs (CLI maps it to a usage error).
struct InvalidArgument : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Thrown when a numeric guarantee fails (singular system, non-convergence, ...).
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline double sq(double v) { return v * v; }

// Format a double with 17 significant digits (bit-stable round trip).
inline std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Deterministic per-stream RNG: independent streams derived from (seed, stream).
inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x9e3779b9u};
  return std::mt19937_64(seq);
}

// FNV-1a 64-bit hash used for provenance/config fingerprints.
inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// Number of worker threads: EXITDIM_THREADS caps hardware concurrency.
inline int worker_threads() {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  if (const char* env = std::getenv("EXITDIM_THREADS")) {
    long v = std::strtol(env, nullptr, 10);
    if (v >= 1 && v < 1024) return static_cast<int>(std::min<unsigned>(hw, static_cast<unsigned>(v)));
  }
  return static_cast<int>(hw);
}

// Chunked parallel map over [0, n). Each chunk is contiguous, so per-index
// outputs are written to distinct slots and the result is order-deterministic.
inline void parallel_for(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& body) {
  int nt = worker_threads();
  if (nt <= 1 || n < 1024) {
    body(0, n);
    return;
  }
  std::vector<std::thread> pool;
  std::int64_t chunk = (n + nt - 1) / nt;
  for (int t = 0; t < nt; ++t) {
    std::int64_t lo = t * chunk, hi = std::min<std::int64_t>(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&body, lo, hi] { body(lo, hi); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace exitdim
