#pragma once

// Whole-domain Jacobi iteration, one synchronous step at a time. This is the
// trust anchor every engine configuration is compared against, so it stays
// single-threaded and always runs the kernel with ilp = 1.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dtb/grid.hpp"
#include "dtb/microkernel.hpp"

namespace dtb {

inline Grid2D jacobi_reference(const Grid2D& grid, const StencilWeights& weights,
                               std::int64_t steps) {
  if (steps < 0) throw std::invalid_argument("steps must be >= 0");
  Grid2D cur = grid;
  if (steps == 0 || grid.empty()) return cur;
  Grid2D next = grid;  // carries the same ghost ring
  const Window win = grid_window(grid);
  const KernelConfig cfg{1};
  for (std::int64_t t = 0; t < steps; ++t) {
    j2d5pt_update(cur.data(), win, next.data(), win, weights, grid.interior(), cfg);
    std::swap(cur, next);
  }
  return cur;
}

struct TraceSnapshot {
  std::int64_t step = 0;
  Grid2D grid;
};

// Keeps every `stride`-th state (t = 0, stride, 2*stride, ...) plus the final one.
inline std::vector<TraceSnapshot> jacobi_reference_trace(const Grid2D& grid,
                                                         const StencilWeights& weights,
                                                         std::int64_t steps,
                                                         std::int64_t stride = 1) {
  if (steps < 0) throw std::invalid_argument("steps must be >= 0");
  if (stride < 1) throw std::invalid_argument("trace stride must be >= 1");
  std::vector<TraceSnapshot> trace;
  trace.push_back({0, grid});
  if (grid.empty()) return trace;
  Grid2D cur = grid;
  Grid2D next = grid;
  const Window win = grid_window(grid);
  for (std::int64_t t = 1; t <= steps; ++t) {
    j2d5pt_update(cur.data(), win, next.data(), win, weights, grid.interior(), KernelConfig{1});
    std::swap(cur, next);
    if (t % stride == 0 || t == steps) trace.push_back({t, cur});
  }
  return trace;
}

}  // namespace dtb
