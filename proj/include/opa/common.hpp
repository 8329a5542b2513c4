#pragma once

// Shared numeric helpers and error taxonomy for the opa library.
// All public interfaces speak degrees; radians never cross a header boundary.

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace opa {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

// ---------------------------------------------------------------------------
// Errors. Every failure mode callers are expected to branch on gets its own
// type; everything else surfaces as validation_error with the violated
// invariant spelled out in the message.

struct validation_error : std::runtime_error {
  explicit validation_error(const std::string& what) : std::runtime_error(what) {}
};

struct domain_error : validation_error {
  explicit domain_error(const std::string& what) : validation_error(what) {}
};

// Long-period arithmetic is undefined at broadside.
struct degenerate_steering_error : validation_error {
  explicit degenerate_steering_error(const std::string& what) : validation_error(what) {}
};

// Requested amplitude variation cannot be realized with nonnegative amplitudes.
struct infeasible_error : validation_error {
  explicit infeasible_error(const std::string& what) : validation_error(what) {}
};

// Global pattern maximum escaped the main-lobe window: the beam is not where
// the steering target says it should be.
struct missteer_error : std::runtime_error {
  explicit missteer_error(const std::string& what) : std::runtime_error(what) {}
};

struct io_error : std::runtime_error {
  explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

struct parse_error : std::runtime_error {
  explicit parse_error(const std::string& what) : std::runtime_error(what) {}
};

// ---------------------------------------------------------------------------
// Angle helpers.

inline constexpr double deg_to_rad(double deg) { return deg * (pi / 180.0); }
inline constexpr double rad_to_deg(double rad) { return rad * (180.0 / pi); }

// sin/cos with exact values at the cardinal inputs. Cuts and steering specs
// are given in degrees; snapping 0/90/180 keeps broadside and axis-aligned
// directions on the exact lattice (phase arguments become exact zeros, which
// the normalization contract relies on).
inline double sin_deg(double deg) {
  if (deg == 0.0) return 0.0;
  if (deg == 90.0) return 1.0;
  if (deg == -90.0) return -1.0;
  if (deg == 180.0 || deg == -180.0) return 0.0;
  return std::sin(deg_to_rad(deg));
}

inline double cos_deg(double deg) {
  if (deg == 0.0) return 1.0;
  if (deg == 90.0 || deg == -90.0) return 0.0;
  if (deg == 180.0 || deg == -180.0) return -1.0;
  return std::cos(deg_to_rad(deg));
}

// Wrap to [0, 2π). fmod keeps the result exact for inputs already in range.
inline double wrap_two_pi(double rad) {
  double r = std::fmod(rad, two_pi);
  if (r < 0.0) r += two_pi;
  if (r == two_pi) r = 0.0;
  return r;
}

// ---------------------------------------------------------------------------
// Pairwise (tree) summation. The tree shape depends only on the element
// count, never on how work was partitioned, so any two evaluations of the
// same term sequence agree bitwise. Bounds rounding error at O(eps·log n)
// versus O(eps·n) for running sums.

template <typename T>
T pairwise_sum(const T* data, std::size_t n) {
  if (n == 0) return T{};
  if (n <= 16) {
    T acc = data[0];
    for (std::size_t i = 1; i < n; ++i) acc += data[i];
    return acc;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(data, half) + pairwise_sum(data + half, n - half);
}

template <typename T>
T pairwise_sum(const std::vector<T>& v) {
  return pairwise_sum(v.data(), v.size());
}

// ---------------------------------------------------------------------------
// Deterministic parallel map over an index range. Workers own contiguous
// blocks; each output slot is written by exactly one worker, and per-slot
// results do not depend on the partition, so worker_count never changes a bit
// of output. worker_count is a cap, not a demand: small ranges use fewer.

template <typename Fn>
void parallel_for(std::size_t n, unsigned worker_count, Fn&& fn) {
  if (n == 0) return;
  unsigned workers = worker_count == 0 ? 1u : worker_count;
  if (static_cast<std::size_t>(workers) > n) workers = static_cast<unsigned>(n);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t lo = static_cast<std::size_t>(w) * chunk;
    if (lo >= n) break;
    const std::size_t hi = std::min(n, lo + chunk);
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace opa
