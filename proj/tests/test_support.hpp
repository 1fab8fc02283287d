#pragma once

// Test-only helpers. The brute-force stepper here deliberately avoids the
// library's kernel and window machinery so it can serve as an independent
// oracle for it.

#include <bit>
#include <cstdint>
#include <utility>

#include "dtb/grid.hpp"
#include "dtb/rng.hpp"

namespace dtb::testing {

inline Grid2D random_grid(index_t nx, index_t ny, Xoshiro256& rng, bool random_ghost = true) {
  Grid2D g(nx, ny);
  for (index_t y = -1; y <= ny; ++y)
    for (index_t x = -1; x <= nx; ++x)
      if (!g.is_ghost(x, y) || random_ghost) g(x, y) = rng.uniform(-1.0, 1.0);
  return g;
}

inline StencilWeights random_weights(Xoshiro256& rng) {
  return StencilWeights{rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5),
                        rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)};
}

// Straight transcription of the update rule on the padded array.
inline Grid2D brute_force_steps(const Grid2D& g, const StencilWeights& k, std::int64_t steps) {
  Grid2D cur = g, nxt = g;
  for (std::int64_t t = 0; t < steps; ++t) {
    for (index_t y = 0; y < g.ny(); ++y) {
      for (index_t x = 0; x < g.nx(); ++x) {
        double acc = cur(x - 1, y) * k.w;
        acc = acc + cur(x + 1, y) * k.e;
        acc = acc + cur(x, y - 1) * k.s;
        acc = acc + cur(x, y) * k.c;
        acc = acc + cur(x, y + 1) * k.n;
        nxt(x, y) = acc;
      }
    }
    std::swap(cur, nxt);
  }
  return cur;
}

inline bool bits_equal(double a, double b) {
  return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

}  // namespace dtb::testing
