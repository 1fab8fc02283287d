#pragma once

// j2d5pt inner kernel. Each x column is processed in blocks of `ilp` rows:
// the column values in(x, y-1 .. y+ilp) are staged once into a small array,
// then `ilp` results are produced and written. The five products are always
// summed W, E, S, C, N left to right so blocking never changes the bits.

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dtb/errors.hpp"
#include "dtb/grid.hpp"

namespace dtb {

struct KernelConfig {
  int ilp = 1;
};

// Strided 2D view into a flat scalar buffer. Window coordinate (0, 0) sits at
// flat index `base`; the stencil may reach one cell outside [0,width)x[0,height).
struct Window {
  index_t base = 0;
  index_t stride = 0;
  index_t width = 0;
  index_t height = 0;

  constexpr index_t offset(index_t x, index_t y) const noexcept {
    return base + y * stride + x;
  }
};

inline Window grid_window(const Grid2D& g) noexcept {
  return Window{g.offset(0, 0), g.stride(), g.nx(), g.ny()};
}

inline double j2d5pt_point(double west, double east, double south, double center,
                           double north, const StencilWeights& k) noexcept {
  return west * k.w + east * k.e + south * k.s + center * k.c + north * k.n;
}

namespace detail {

inline void check_cols(const Window& win, const Rect& cols, const char* which) {
  if (win.stride < win.width)
    throw std::out_of_range(std::string(which) + " window stride smaller than its width");
  if (!Rect{0, 0, win.width, win.height}.contains(cols))
    throw std::out_of_range(std::string(which) + " window does not cover the update region");
}

struct FlatRange {
  index_t lo;
  index_t hi;  // inclusive
};

}  // namespace detail

/// Applies one Jacobi step over `cols` (window coordinates shared by both
/// windows): out(x,y) = W in(x-1,y) + E in(x+1,y) + S in(x,y-1) + C in(x,y) + N in(x,y+1).
inline void j2d5pt_update(std::span<const double> in, const Window& iw,
                          std::span<double> out, const Window& ow,
                          const StencilWeights& k, const Rect& cols,
                          const KernelConfig& cfg) {
  if (cfg.ilp < 1)
    throw std::invalid_argument("ilp must be >= 1, got " + std::to_string(cfg.ilp));
  if (cols.width < 0 || cols.height < 0)
    throw std::out_of_range("negative update extent");
  if (cols.empty()) return;
  detail::check_cols(iw, cols, "input");
  detail::check_cols(ow, cols, "output");

  const index_t x0 = cols.x0, x1 = cols.x1();
  const index_t y0 = cols.y0, y1 = cols.y1();

  // Reach of the five-point star, as flat index extremes.
  const detail::FlatRange read{
      std::min(iw.offset(x0, y0 - 1), iw.offset(x0 - 1, y0)),
      std::max(iw.offset(x1 - 1, y1), iw.offset(x1, y1 - 1))};
  const detail::FlatRange write{ow.offset(x0, y0), ow.offset(x1 - 1, y1 - 1)};
  if (read.lo < 0 || read.hi >= static_cast<index_t>(in.size()))
    throw std::out_of_range("stencil reach leaves the input buffer");
  if (write.lo < 0 || write.hi >= static_cast<index_t>(out.size()))
    throw std::out_of_range("update region leaves the output buffer");

  {
    const double* rlo = in.data() + read.lo;
    const double* rhi = in.data() + read.hi;
    const double* wlo = out.data() + write.lo;
    const double* whi = out.data() + write.hi;
    if (!(std::less<const double*>{}(rhi, wlo) || std::less<const double*>{}(whi, rlo)))
      throw contract_violation("j2d5pt_update input and output overlap");
  }

  const index_t ilp = cfg.ilp;
  std::vector<double> staged(static_cast<std::size_t>(ilp + 2));  // t[ILP+2]
  std::vector<double> result(static_cast<std::size_t>(ilp));
  const double* src = in.data();
  double* dst = out.data();

  index_t y = y0;
  for (; y + ilp <= y1; y += ilp) {
    for (index_t x = x0; x < x1; ++x) {
      for (index_t r = 0; r < ilp + 2; ++r) staged[r] = src[iw.offset(x, y - 1 + r)];
      for (index_t r = 0; r < ilp; ++r) {
        result[r] = src[iw.offset(x - 1, y + r)] * k.w +
                    src[iw.offset(x + 1, y + r)] * k.e +
                    staged[r] * k.s +
                    staged[r + 1] * k.c +
                    staged[r + 2] * k.n;
      }
      for (index_t r = 0; r < ilp; ++r) dst[ow.offset(x, y + r)] = result[r];
    }
  }
  // Remainder rows when the height is not a multiple of ilp.
  for (; y < y1; ++y) {
    for (index_t x = x0; x < x1; ++x) {
      dst[ow.offset(x, y)] = j2d5pt_point(src[iw.offset(x - 1, y)], src[iw.offset(x + 1, y)],
                                          src[iw.offset(x, y - 1)], src[iw.offset(x, y)],
                                          src[iw.offset(x, y + 1)], k);
    }
  }
}

}  // namespace dtb
