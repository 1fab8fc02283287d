#pragma once

// Closed-form global-memory traffic for the naive host-loop scheme and for
// deep temporal blocking. The engine counts the same quantities while it runs;
// the two must agree exactly.

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "dtb/device.hpp"
#include "dtb/planner.hpp"

namespace dtb {

struct TrafficReport {
  std::int64_t global_load_cells = 0;   // interior cells read from global memory
  std::int64_t global_store_cells = 0;
  std::int64_t ghost_load_cells = 0;    // frozen boundary cells read alongside
  std::int64_t halo_exchanged_cells = 0;
  std::int64_t redundant_compute_cells = 0;
  std::int64_t useful_compute_cells = 0;
  std::uint64_t scratchpad_peak_bytes = 0;
  std::uint64_t elem_bytes = sizeof(double);

  std::uint64_t load_bytes() const noexcept { return bytes(global_load_cells); }
  std::uint64_t store_bytes() const noexcept { return bytes(global_store_cells); }
  std::uint64_t halo_bytes() const noexcept { return bytes(halo_exchanged_cells); }

  friend bool operator==(const TrafficReport&, const TrafficReport&) = default;

 private:
  std::uint64_t bytes(std::int64_t cells) const noexcept {
    return static_cast<std::uint64_t>(cells) * elem_bytes;
  }
};

// 5 multiplies + 4 adds per updated cell.
inline constexpr double kFlopPerCell = 9.0;

/// One load and one store per cell per step; neighbour reuse is assumed to be
/// perfectly cached, which makes this the most favourable baseline.
inline TrafficReport model_naive_traffic(index_t nx, index_t ny, std::int64_t steps,
                                         std::uint64_t elem_bytes = sizeof(double)) {
  if (steps < 0) throw std::invalid_argument("steps must be >= 0");
  TrafficReport r;
  r.elem_bytes = elem_bytes;
  r.global_load_cells = nx * ny * steps;
  r.global_store_cells = nx * ny * steps;
  r.useful_compute_cells = nx * ny * steps;
  return r;
}

inline TrafficReport model_dtb_traffic(const TilingPlan& plan, std::int64_t total_steps) {
  const index_t depth = plan.depth;
  if (total_steps < 1 || total_steps % depth != 0)
    throw std::invalid_argument("total_steps (" + std::to_string(total_steps) +
                                ") must be a positive multiple of T (" +
                                std::to_string(depth) + ")");
  const std::int64_t blocks = total_steps / depth;
  const index_t nx = plan.nx, ny = plan.ny;

  TrafficReport r;
  r.elem_bytes = plan.elem_bytes;
  r.scratchpad_peak_bytes = plan.footprint_bytes;
  std::int64_t computed = 0;
  for (const auto& tile : plan.tiles) {
    const Rect& l = tile.load_region;
    const std::int64_t interior_loads = intersect(l, Rect{0, 0, nx, ny}).area();
    r.global_load_cells += interior_loads;
    r.ghost_load_cells += l.area() - interior_loads;
    r.global_store_cells += tile.interior.area();

    const std::int64_t busy = std::min<std::int64_t>(plan.device.workers, l.width);
    r.halo_exchanged_cells += 2 * (busy - 1) * l.height * depth;

    // Trapezoid: non-ghost sides lose one cell per step.
    const bool ghost_l = l.x0 == -1, ghost_r = l.x1() == nx + 1;
    const bool ghost_b = l.y0 == -1, ghost_t = l.y1() == ny + 1;
    for (index_t t = 1; t <= depth; ++t) {
      const std::int64_t w = l.width - (ghost_l ? 1 : t) - (ghost_r ? 1 : t);
      const std::int64_t h = l.height - (ghost_b ? 1 : t) - (ghost_t ? 1 : t);
      if (w > 0 && h > 0) computed += w * h;
    }
  }
  r.global_load_cells *= blocks;
  r.ghost_load_cells *= blocks;
  r.global_store_cells *= blocks;
  r.halo_exchanged_cells *= blocks;
  r.useful_compute_cells = nx * ny * total_steps;
  r.redundant_compute_cells = computed * blocks - r.useful_compute_cells;
  return r;
}

struct FootprintEntry {
  std::string name;
  std::uint64_t scratchpad_bytes = 0;
};

// Scratchpad consumed by the j2d5pt double-precision kernel of two
// code-generating temporal-blocking frameworks, next to this engine's plan.
inline constexpr std::uint64_t kStencilGenFootprintBytes = 4'529'848;  // 4.32 MB
inline constexpr std::uint64_t kAn5dFootprintBytes = 905'970;          // 0.864 MB

inline std::vector<FootprintEntry> sota_footprint_table(const TilingPlan& plan) {
  return {
      {"StencilGen", kStencilGenFootprintBytes},
      {"AN5D", kAn5dFootprintBytes},
      {"DTB(" + plan.device.name + ")",
       plan.footprint_bytes * static_cast<std::uint64_t>(plan.device.workers)},
  };
}

}  // namespace dtb
