#pragma once

// Serial tiling of the domain so each device tile fills, without exceeding,
// every worker's scratchpad. A tile advanced T steps needs T cells of halo on
// each side (radius-1 stencil); halos are clipped to the ghost ring.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "dtb/device.hpp"
#include "dtb/errors.hpp"
#include "dtb/grid.hpp"

namespace dtb {

struct DeviceTile {
  Rect interior;     // cells this tile stores after T steps
  index_t halo = 0;  // temporal halo, equal to T
  Rect load_region;  // interior dilated by T, clipped to domain + ghost ring
};

// One worker's x-slice of a tile's load region. The stage strips are the
// owned edge columns published to the left and right neighbour each superstep.
struct SubTile {
  index_t owner = 0;
  Rect cols;
  Rect stage_left;
  Rect stage_right;
};

struct TilingPlan {
  index_t nx = 0;
  index_t ny = 0;
  index_t depth = 1;  // T
  DeviceModel device;
  std::uint64_t elem_bytes = sizeof(double);
  index_t tile_width = 0;   // nominal interior size; edge tiles are clipped
  index_t tile_height = 0;
  std::vector<DeviceTile> tiles;  // row-major serial order
  std::uint64_t footprint_bytes = 0;  // peak per-worker bytes over all tiles
};

constexpr index_t ceil_div(index_t a, index_t b) noexcept { return (a + b - 1) / b; }

/// Per-worker bytes for a tile whose load region is width x height: a front
/// and a back buffer, each holding the worker's share of the columns plus one
/// exchanged halo column per side.
inline std::uint64_t scratchpad_footprint(index_t width, index_t height, index_t depth,
                                          std::uint64_t elem_bytes, index_t workers) {
  (void)depth;  // T only enters through the load dimensions
  if (width < 1 || height < 1 || workers < 1)
    throw std::invalid_argument("scratchpad_footprint needs positive dimensions");
  const auto cols = static_cast<std::uint64_t>(ceil_div(width, workers) + 2);
  return 2 * cols * static_cast<std::uint64_t>(height) * elem_bytes;
}

inline Rect load_region_for(const Rect& interior, index_t depth, index_t nx, index_t ny) {
  return intersect(dilate(interior, depth), Rect{-1, -1, nx + 2, ny + 2});
}

// Cells a tile computes at step t (1-based) of its time block. Sides backed by
// the ghost ring stay put; every other side erodes one cell per step.
inline Rect active_region(const DeviceTile& tile, index_t t, index_t nx, index_t ny) {
  const Rect& l = tile.load_region;
  const index_t left = l.x0 == -1 ? 1 : t;
  const index_t right = l.x1() == nx + 1 ? 1 : t;
  const index_t bottom = l.y0 == -1 ? 1 : t;
  const index_t top = l.y1() == ny + 1 ? 1 : t;
  const index_t w = l.width - left - right;
  const index_t h = l.height - bottom - top;
  if (w <= 0 || h <= 0) return Rect{l.x0 + left, l.y0 + bottom, 0, 0};
  return Rect{l.x0 + left, l.y0 + bottom, w, h};
}

namespace detail {

inline void check_plan_args(index_t nx, index_t ny, index_t depth, std::uint64_t elem_bytes) {
  if (nx < 1 || ny < 1)
    throw std::invalid_argument("domain must be at least 1x1");
  if (depth < 1) throw std::invalid_argument("temporal depth T must be >= 1");
  if (elem_bytes == 0) throw std::invalid_argument("elem_bytes must be >= 1");
}

inline std::vector<DeviceTile> make_tiles(index_t nx, index_t ny, index_t depth,
                                          index_t tile_w, index_t tile_h) {
  std::vector<DeviceTile> tiles;
  tiles.reserve(static_cast<std::size_t>(ceil_div(nx, tile_w) * ceil_div(ny, tile_h)));
  for (index_t y0 = 0; y0 < ny; y0 += tile_h) {
    for (index_t x0 = 0; x0 < nx; x0 += tile_w) {
      const Rect interior{x0, y0, std::min(tile_w, nx - x0), std::min(tile_h, ny - y0)};
      tiles.push_back({interior, depth, load_region_for(interior, depth, nx, ny)});
    }
  }
  return tiles;
}

inline std::uint64_t peak_footprint(const std::vector<DeviceTile>& tiles, index_t depth,
                                    std::uint64_t elem_bytes, index_t workers) {
  std::uint64_t peak = 0;
  for (const auto& t : tiles)
    peak = std::max(peak, scratchpad_footprint(t.load_region.width, t.load_region.height,
                                               depth, elem_bytes, workers));
  return peak;
}

inline std::uint64_t min_required_bytes(index_t nx, index_t ny, index_t depth,
                                        std::uint64_t elem_bytes, index_t workers) {
  return scratchpad_footprint(std::min(1 + 2 * depth, nx + 2), std::min(1 + 2 * depth, ny + 2),
                              depth, elem_bytes, workers);
}

inline std::string describe(const DeviceModel& d) {
  return "'" + d.name + "' (" + std::to_string(d.workers) + " workers x " +
         std::to_string(d.scratchpad_bytes_per_worker) + " B)";
}

}  // namespace detail

/// Plan with an explicit nominal tile interior. Throws infeasible_plan when
/// the resulting footprint exceeds the per-worker scratchpad.
inline TilingPlan plan_with_tile_size(index_t nx, index_t ny, const DeviceModel& device,
                                      index_t depth, std::uint64_t elem_bytes,
                                      index_t tile_w, index_t tile_h) {
  detail::check_plan_args(nx, ny, depth, elem_bytes);
  if (tile_w < 1 || tile_h < 1) throw std::invalid_argument("tile size must be >= 1x1");
  tile_w = std::min(tile_w, nx);
  tile_h = std::min(tile_h, ny);
  TilingPlan plan{nx, ny, depth, device, elem_bytes, tile_w, tile_h, {}, 0};
  plan.tiles = detail::make_tiles(nx, ny, depth, tile_w, tile_h);
  plan.footprint_bytes = detail::peak_footprint(plan.tiles, depth, elem_bytes, device.workers);
  if (plan.footprint_bytes > device.scratchpad_bytes_per_worker) {
    throw infeasible_plan("tile " + std::to_string(tile_w) + "x" + std::to_string(tile_h) +
                              " at T=" + std::to_string(depth) + " needs " +
                              std::to_string(plan.footprint_bytes) +
                              " B per worker, device " + detail::describe(device) +
                              " has " + std::to_string(device.scratchpad_bytes_per_worker),
                          plan.footprint_bytes);
  }
  return plan;
}

/// Chooses the tile size that needs the fewest serial tiles, preferring
/// full-width row bands, with the tallest height that still fits.
inline TilingPlan plan_device_tiles(index_t nx, index_t ny, const DeviceModel& device,
                                    index_t depth, std::uint64_t elem_bytes = sizeof(double)) {
  detail::check_plan_args(nx, ny, depth, elem_bytes);
  const std::uint64_t cap = device.scratchpad_bytes_per_worker;
  const index_t workers = device.workers;

  index_t best_w = 0, best_h = 0;
  index_t best_count = std::numeric_limits<index_t>::max();
  for (index_t cx = 1; cx <= nx && cx < best_count; ++cx) {
    const index_t w = ceil_div(nx, cx);
    const index_t tiles_x = ceil_div(nx, w);
    if (tiles_x != cx) continue;  // same band count as a wider width already tried
    // Upper bounds on any tile's load dims for this width.
    const index_t load_w = std::min(w + 2 * depth, nx + 2);
    const std::uint64_t row_bytes =
        2 * static_cast<std::uint64_t>(ceil_div(load_w, workers) + 2) * elem_bytes;
    const auto max_load_h = static_cast<index_t>(
        std::min<std::uint64_t>(cap / row_bytes, static_cast<std::uint64_t>(ny + 2)));
    if (max_load_h < std::min(1 + 2 * depth, ny + 2)) continue;
    const index_t h = max_load_h >= ny + 2 ? ny : max_load_h - 2 * depth;
    const index_t count = tiles_x * ceil_div(ny, h);
    if (count < best_count) {
      best_count = count;
      best_w = w;
      best_h = h;
    }
  }
  if (best_count == std::numeric_limits<index_t>::max()) {
    const std::uint64_t need =
        detail::min_required_bytes(nx, ny, depth, elem_bytes, workers);
    throw infeasible_plan("no tile fits: a 1x1 interior at T=" + std::to_string(depth) +
                              " needs " + std::to_string(need) + " B per worker, device " +
                              detail::describe(device) + " has " + std::to_string(cap),
                          need);
  }
  return plan_with_tile_size(nx, ny, device, depth, elem_bytes, best_w, best_h);
}

// Balanced x-split of the tile's load region: widths differ by at most one,
// wider slices first; surplus workers get zero-width slices and idle.
inline std::vector<SubTile> partition_subtiles(const DeviceTile& tile, const DeviceModel& device) {
  const Rect& l = tile.load_region;
  const index_t workers = device.workers;
  const index_t base = l.width / workers;
  const index_t extra = l.width % workers;
  std::vector<SubTile> subs;
  subs.reserve(static_cast<std::size_t>(workers));
  index_t x = l.x0;
  for (index_t p = 0; p < workers; ++p) {
    const index_t w = base + (p < extra ? 1 : 0);
    SubTile s;
    s.owner = p;
    s.cols = Rect{x, l.y0, w, w > 0 ? l.height : 0};
    if (w > 0) {
      s.stage_left = Rect{x, l.y0, 1, l.height};
      s.stage_right = Rect{x + w - 1, l.y0, 1, l.height};
    } else {
      s.stage_left = s.stage_right = Rect{x, l.y0, 0, 0};
    }
    subs.push_back(s);
    x += w;
  }
  return subs;
}

}  // namespace dtb
