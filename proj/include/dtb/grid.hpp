#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dtb {

using index_t = std::int64_t;

// Axis-aligned cell rectangle in interior coordinates. Interior cells are
// [0,nx) x [0,ny); the ghost ring lives at -1 and nx (resp. ny).
struct Rect {
  index_t x0 = 0;
  index_t y0 = 0;
  index_t width = 0;
  index_t height = 0;

  constexpr index_t x1() const noexcept { return x0 + width; }
  constexpr index_t y1() const noexcept { return y0 + height; }
  constexpr index_t area() const noexcept { return width * height; }
  constexpr bool empty() const noexcept { return width <= 0 || height <= 0; }

  constexpr bool contains(index_t x, index_t y) const noexcept {
    return x >= x0 && x < x1() && y >= y0 && y < y1();
  }

  constexpr bool contains(const Rect& r) const noexcept {
    return r.empty() ||
           (r.x0 >= x0 && r.y0 >= y0 && r.x1() <= x1() && r.y1() <= y1());
  }

  friend constexpr bool operator==(const Rect&, const Rect&) = default;
};

// Intersection; an empty result is normalized to zero width and height.
constexpr Rect intersect(const Rect& a, const Rect& b) noexcept {
  const index_t x0 = std::max(a.x0, b.x0);
  const index_t y0 = std::max(a.y0, b.y0);
  const index_t x1 = std::min(a.x1(), b.x1());
  const index_t y1 = std::min(a.y1(), b.y1());
  if (x1 <= x0 || y1 <= y0) return Rect{x0, y0, 0, 0};
  return Rect{x0, y0, x1 - x0, y1 - y0};
}

// Grows `r` by `d` cells on every side (shrinks for negative d).
constexpr Rect dilate(const Rect& r, index_t d) noexcept {
  return Rect{r.x0 - d, r.y0 - d, r.width + 2 * d, r.height + 2 * d};
}

/// Coefficients of the five-point update
///   out = W*in(x-1,y) + E*in(x+1,y) + S*in(x,y-1) + C*in(x,y) + N*in(x,y+1).
struct StencilWeights {
  double w = 0.0;
  double e = 0.0;
  double s = 0.0;
  double c = 1.0;
  double n = 0.0;

  /// Heat-equation style weights: neighbours get alpha, centre 1 - 4 alpha.
  static StencilWeights diffusive(double alpha) {
    return StencilWeights{alpha, alpha, alpha, 1.0 - 4.0 * alpha, alpha};
  }

  bool finite() const noexcept {
    return std::isfinite(w) && std::isfinite(e) && std::isfinite(s) &&
           std::isfinite(c) && std::isfinite(n);
  }

  friend bool operator==(const StencilWeights&, const StencilWeights&) = default;
};

// Row-major double field with a one-cell ghost ring. The ghost ring holds
// frozen Dirichlet values: stencil updates only ever write interior cells.
class Grid2D {
 public:
  // Empty grid (nx = ny = 0, no storage). Only produced by zero-area
  // extraction; every other path requires positive dimensions.
  Grid2D() = default;

  Grid2D(index_t nx, index_t ny, double ghost_value = 0.0) : nx_(nx), ny_(ny) {
    if (nx < 1 || ny < 1) {
      throw std::invalid_argument("grid dimensions must be >= 1, got " +
                                  std::to_string(nx) + "x" + std::to_string(ny));
    }
    data_.assign(static_cast<std::size_t>((nx + 2) * (ny + 2)), ghost_value);
  }

  index_t nx() const noexcept { return nx_; }
  index_t ny() const noexcept { return ny_; }
  index_t stride() const noexcept { return nx_ + 2; }
  bool empty() const noexcept { return data_.empty(); }
  Rect interior() const noexcept { return Rect{0, 0, nx_, ny_}; }

  // Flat index of interior coordinate (x, y); valid for x in [-1, nx], y in [-1, ny].
  index_t offset(index_t x, index_t y) const noexcept {
    return (y + 1) * stride() + (x + 1);
  }

  double& operator()(index_t x, index_t y) noexcept {
    return data_[static_cast<std::size_t>(offset(x, y))];
  }
  double operator()(index_t x, index_t y) const noexcept {
    return data_[static_cast<std::size_t>(offset(x, y))];
  }

  double& at(index_t x, index_t y) {
    check(x, y);
    return (*this)(x, y);
  }
  double at(index_t x, index_t y) const {
    check(x, y);
    return (*this)(x, y);
  }

  bool is_ghost(index_t x, index_t y) const noexcept {
    return x == -1 || y == -1 || x == nx_ || y == ny_;
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  // Sets every ghost-ring cell to `value`.
  void fill_ghost(double value) {
    for (index_t x = -1; x <= nx_; ++x) {
      (*this)(x, -1) = value;
      (*this)(x, ny_) = value;
    }
    for (index_t y = 0; y < ny_; ++y) {
      (*this)(-1, y) = value;
      (*this)(nx_, y) = value;
    }
  }

 private:
  void check(index_t x, index_t y) const {
    if (x < -1 || x > nx_ || y < -1 || y > ny_) {
      throw std::out_of_range("grid coordinate (" + std::to_string(x) + "," +
                              std::to_string(y) + ") outside ghost-padded extent");
    }
  }

  index_t nx_ = 0;
  index_t ny_ = 0;
  std::vector<double> data_;
};

// Builds a grid whose interior is filled by `gen(x, y)` in row-major order.
template <typename Generator>
Grid2D grid_new(index_t nx, index_t ny, Generator&& gen, double ghost_value = 0.0) {
  Grid2D g(nx, ny, ghost_value);
  for (index_t y = 0; y < ny; ++y)
    for (index_t x = 0; x < nx; ++x) g(x, y) = gen(x, y);
  return g;
}

inline Grid2D grid_constant(index_t nx, index_t ny, double interior, double ghost_value = 0.0) {
  return grid_new(nx, ny, [interior](index_t, index_t) { return interior; }, ghost_value);
}

// Copies `region` (interior coordinates of `grid`) into a standalone grid.
// The new ghost ring is the one-cell frame around the region in the source,
// which falls back to the source ghost ring where the region touches it.
inline Grid2D grid_extract(const Grid2D& grid, const Rect& region) {
  if (region.width < 0 || region.height < 0 || !grid.interior().contains(region)) {
    throw std::out_of_range("extract region [" + std::to_string(region.x0) + "," +
                            std::to_string(region.y0) + " " +
                            std::to_string(region.width) + "x" +
                            std::to_string(region.height) + "] outside grid interior");
  }
  if (region.empty()) return Grid2D{};
  Grid2D out(region.width, region.height);
  for (index_t y = -1; y <= region.height; ++y)
    for (index_t x = -1; x <= region.width; ++x)
      out(x, y) = grid(region.x0 + x, region.y0 + y);
  return out;
}

struct CompareReport {
  bool bit_equal = true;
  double max_abs_diff = 0.0;
  std::optional<std::pair<index_t, index_t>> first_mismatch;
};

// Interior-only comparison. Bit equality is on the IEEE-754 representation,
// so 0.0 and -0.0 differ; a NaN difference counts as infinite.
inline CompareReport grid_compare(const Grid2D& a, const Grid2D& b) {
  if (a.nx() != b.nx() || a.ny() != b.ny()) {
    throw std::invalid_argument("grid_compare dimension mismatch: " +
                                std::to_string(a.nx()) + "x" + std::to_string(a.ny()) +
                                " vs " + std::to_string(b.nx()) + "x" +
                                std::to_string(b.ny()));
  }
  CompareReport r;
  for (index_t y = 0; y < a.ny(); ++y) {
    for (index_t x = 0; x < a.nx(); ++x) {
      const double va = a(x, y);
      const double vb = b(x, y);
      if (std::bit_cast<std::uint64_t>(va) == std::bit_cast<std::uint64_t>(vb)) continue;
      if (r.bit_equal) {
        r.bit_equal = false;
        r.first_mismatch = std::make_pair(x, y);
      }
      double d = std::fabs(va - vb);
      if (std::isnan(d)) d = std::numeric_limits<double>::infinity();
      r.max_abs_diff = std::max(r.max_abs_diff, d);
    }
  }
  return r;
}

// True when the ghost rings of two equally sized grids are bitwise identical.
inline bool ghost_ring_equal(const Grid2D& a, const Grid2D& b) {
  if (a.nx() != b.nx() || a.ny() != b.ny()) return false;
  for (index_t y = -1; y <= a.ny(); ++y)
    for (index_t x = -1; x <= a.nx(); ++x)
      if (a.is_ghost(x, y) &&
          std::bit_cast<std::uint64_t>(a(x, y)) != std::bit_cast<std::uint64_t>(b(x, y)))
        return false;
  return true;
}

}  // namespace dtb
