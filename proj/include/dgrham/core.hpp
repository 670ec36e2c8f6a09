#pragma once

/// @file core.hpp
/// @brief Small shared vocabulary: 2D vector types, function aliases and a
/// deterministic parallel map.

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace dgrham {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Scalar function of a physical point.
using ScalarFunction = std::function<double(const Vec2&)>;
/// Vector function of a physical point.
using VectorFunction = std::function<Vec2(const Vec2&)>;
/// Scalar function of a physical point and time.
using ScalarFieldT = std::function<double(const Vec2&, double)>;
/// Vector function of a physical point and time.
using VectorFieldT = std::function<Vec2(const Vec2&, double)>;

/// Rotation by +pi/2: v^perp = (-v_y, v_x).
inline Vec2 perp(const Vec2& v) { return {-v.y(), v.x()}; }

/// 2D cross product a_x b_y - a_y b_x.
inline double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

namespace detail {
inline std::atomic<int>& thread_cap() {
  static std::atomic<int> cap{static_cast<int>(std::max(1u, std::thread::hardware_concurrency()))};
  return cap;
}
}  // namespace detail

/// Caps the worker count used by parallel_for.
inline void set_num_threads(int n) { detail::thread_cap().store(std::max(1, n)); }
inline int num_threads() { return detail::thread_cap().load(); }

/// Calls f(i) for i in [0, n). Each index is visited exactly once; callers
/// write to per-index outputs, so results do not depend on the worker count.
template <class F>
void parallel_for(std::size_t n, F&& f) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(num_threads()), n);
  if (workers <= 1 || n < 64) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &f, &failure, &failure_mutex] {
      try {
        for (std::size_t i = lo; i < hi; ++i) f(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace dgrham
