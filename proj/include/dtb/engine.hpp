#pragma once

// Deep temporal blocking executor.
//
// For every time block of depth T, tiles are processed one after another.
// Each tile is split along x across the device's logical workers; every
// worker keeps its slice (plus one halo column per side) in a private
// front/back buffer pair that stands in for an SM's scratchpad. A tile runs
// as BSP supersteps:
//
//   load slice from global input          | barrier
//   T times: copy neighbours' staged edge columns into own halo | barrier
//            update active region into back, swap, stage edges | barrier
//   store the slice's part of the tile interior to global output
//
// Tile rims that are not backed by the ghost ring go stale one cell per step
// (trapezoidal shrink), so after T steps exactly the interior is valid.
// Global input and output swap between time blocks.

#include <algorithm>
#include <atomic>
#include <barrier>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "dtb/errors.hpp"
#include "dtb/grid.hpp"
#include "dtb/metrics.hpp"
#include "dtb/microkernel.hpp"
#include "dtb/planner.hpp"
#include "dtb/worker_pool.hpp"

namespace dtb {

struct EngineOptions {
  unsigned threads = 0;       // physical threads; 0 = hardware concurrency
  bool poison_stale = false;  // fill stale rim cells with signaling NaN
};

struct DtbResult {
  Grid2D grid;
  TrafficReport report;
};

// Values of a rectangular region of a tile, addressed in global interior coordinates.
struct TileImage {
  Rect region;
  std::vector<double> values;

  double at(index_t x, index_t y) const {
    if (!region.contains(x, y)) throw std::out_of_range("tile image coordinate outside region");
    return values[static_cast<std::size_t>((y - region.y0) * region.width + (x - region.x0))];
  }
};

// Probed tile within one time block: the loaded region, the buffer contents
// after each of the T supersteps, and the stored interior.
struct TileTrace {
  std::int64_t block = 0;
  TileImage load;
  std::vector<TileImage> steps;
  TileImage store;
};

struct DtbTraceResult {
  DtbResult result;
  std::vector<TileTrace> blocks;
};

// Geometry of one worker's slice of a tile. Buffer column 0 and width+1 are
// the exchanged halo columns; buffer row 0 is the load region's first row.
struct SliceGeometry {
  index_t c0 = 0;     // first owned global column
  index_t width = 0;  // owned columns
  index_t stride = 2;
  index_t rows = 0;
  index_t y0 = 0;

  index_t idx(index_t gx, index_t gy) const noexcept {
    return (gy - y0) * stride + (gx - c0 + 1);
  }
};

// Same balanced split as partition_subtiles, without materializing the list.
inline SliceGeometry slice_geometry(const DeviceTile& tile, index_t workers, index_t p) {
  const Rect& l = tile.load_region;
  const index_t base = l.width / workers, extra = l.width % workers;
  SliceGeometry s;
  s.width = base + (p < extra ? 1 : 0);
  s.c0 = l.x0 + p * base + std::min(p, extra);
  s.stride = s.width + 2;
  s.rows = l.height;
  s.y0 = l.y0;
  return s;
}

// One worker's modeled scratchpad: double-buffered slice plus the two staging
// strips its neighbours read during halo exchange.
struct WorkerBuffers {
  std::vector<double> front;
  std::vector<double> back;
  std::vector<double> stage_left;
  std::vector<double> stage_right;
  std::uint64_t capacity_bytes = 0;  // front + back
};

// Publishes the owned edge columns of `front` for the neighbours.
inline void stage_edges(WorkerBuffers& w, const SliceGeometry& s) {
  for (index_t r = 0; r < s.rows; ++r) {
    w.stage_left[r] = w.front[r * s.stride + 1];
    w.stage_right[r] = w.front[r * s.stride + s.width];
  }
}

// Fills worker p's halo columns from its neighbours' staging strips. Must run
// between barriers: neighbours only write their strips outside this phase.
// Returns the number of cells copied.
inline std::int64_t exchange_halo(std::span<WorkerBuffers> ws, const DeviceTile& tile,
                                  index_t p) {
  const auto workers = static_cast<index_t>(ws.size());
  const SliceGeometry s = slice_geometry(tile, workers, p);
  if (s.width == 0) return 0;
  WorkerBuffers& w = ws[p];
  std::int64_t copied = 0;
  if (p > 0) {
    const WorkerBuffers& left = ws[p - 1];
    for (index_t r = 0; r < s.rows; ++r) w.front[r * s.stride] = left.stage_right[r];
    copied += s.rows;
  }
  if (p + 1 < workers && slice_geometry(tile, workers, p + 1).width > 0) {
    const WorkerBuffers& right = ws[p + 1];
    for (index_t r = 0; r < s.rows; ++r) w.front[r * s.stride + s.width + 1] = right.stage_left[r];
    copied += s.rows;
  }
  return copied;
}

class Engine {
 public:
  explicit Engine(EngineOptions opts = {})
      : opts_(opts), pool_(opts.threads ? opts.threads : default_threads()) {}

  unsigned threads() const noexcept { return pool_.size(); }

  DtbResult run(const Grid2D& grid, const StencilWeights& weights, std::int64_t total_steps,
                const TilingPlan& plan, const KernelConfig& cfg) {
    return execute(grid, weights, total_steps, plan, cfg, std::nullopt).result;
  }

  DtbTraceResult run_trace(const Grid2D& grid, const StencilWeights& weights,
                           std::int64_t total_steps, const TilingPlan& plan,
                           const KernelConfig& cfg, std::size_t probe) {
    if (probe >= plan.tiles.size())
      throw std::out_of_range("probe tile " + std::to_string(probe) + " out of range (plan has " +
                              std::to_string(plan.tiles.size()) + " tiles)");
    return execute(grid, weights, total_steps, plan, cfg, probe);
  }

 private:
  static unsigned default_threads() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1;
  }

  struct alignas(64) Counters {
    std::int64_t loads = 0;
    std::int64_t ghost_loads = 0;
    std::int64_t stores = 0;
    std::int64_t halo = 0;
    std::int64_t computed = 0;
  };

  DtbTraceResult execute(const Grid2D& grid, const StencilWeights& weights,
                         std::int64_t total_steps, const TilingPlan& plan,
                         const KernelConfig& cfg, std::optional<std::size_t> probe) {
    validate(grid, total_steps, plan, cfg);
    const index_t workers = plan.device.workers;
    const index_t depth = plan.depth;
    const index_t nx = grid.nx(), ny = grid.ny();
    const std::int64_t blocks = total_steps / depth;

    // Capacity check for every (tile, worker) before any thread starts.
    std::size_t max_cells = 0, max_rows = 0;
    std::uint64_t peak_bytes = 0;
    for (const auto& tile : plan.tiles) {
      for (index_t p = 0; p < workers; ++p) {
        const SliceGeometry s = slice_geometry(tile, workers, p);
        if (s.width == 0) continue;
        const auto cells = static_cast<std::size_t>(s.stride * s.rows);
        const std::uint64_t bytes = 2 * cells * sizeof(double);
        if (bytes > plan.device.scratchpad_bytes_per_worker)
          throw contract_violation("worker " + std::to_string(p) + " needs " +
                                   std::to_string(bytes) + " B of scratchpad, capacity is " +
                                   std::to_string(plan.device.scratchpad_bytes_per_worker));
        max_cells = std::max(max_cells, cells);
        max_rows = std::max(max_rows, static_cast<std::size_t>(s.rows));
        peak_bytes = std::max(peak_bytes, bytes);
      }
    }

    const double fill = opts_.poison_stale ? std::numeric_limits<double>::signaling_NaN() : 0.0;
    std::vector<WorkerBuffers> ws(static_cast<std::size_t>(workers));
    std::vector<Counters> counters(static_cast<std::size_t>(workers));
    for (auto& w : ws) {
      w.front.assign(max_cells, fill);
      w.back.assign(max_cells, fill);
      w.stage_left.assign(max_rows, fill);
      w.stage_right.assign(max_rows, fill);
      w.capacity_bytes = 2 * max_cells * sizeof(double);
    }

    Grid2D a = grid;
    Grid2D b = grid;
    DtbTraceResult out;
    if (probe) out.blocks.resize(static_cast<std::size_t>(blocks));

    const unsigned nthreads =
        static_cast<unsigned>(std::min<index_t>(pool_.size(), workers));
    std::barrier<> sync(nthreads);
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mu;

    // Work inside a phase must not escape: a throwing thread would leave the
    // others stuck at the next barrier.
    auto guarded = [&](auto&& fn) {
      if (failed.load(std::memory_order_relaxed)) return;
      try {
        fn();
      } catch (...) {
        std::lock_guard lk(error_mu);
        if (!first_error) first_error = std::current_exception();
        failed = true;
      }
    };

    const index_t ilp = cfg.ilp;
    const StencilWeights k = weights;
    const bool poison = opts_.poison_stale;

    auto body = [&](unsigned tid) {
      Grid2D* src = &a;
      Grid2D* dst = &b;
      for (std::int64_t blk = 0; blk < blocks; ++blk) {
        for (std::size_t ti = 0; ti < plan.tiles.size(); ++ti) {
          const DeviceTile& tile = plan.tiles[ti];
          const bool probed = probe && *probe == ti;

          for (index_t p = tid; p < workers; p += nthreads) {
            guarded([&] {
              load(ws[p], counters[p], slice_geometry(tile, workers, p), *src, poison);
            });
          }
          sync.arrive_and_wait();
          if (probed && tid == 0)
            out.blocks[blk].load = image(ws, tile, tile.load_region, workers);

          for (index_t t = 1; t <= depth; ++t) {
            for (index_t p = tid; p < workers; p += nthreads) {
              guarded([&] { counters[p].halo += exchange_halo(ws, tile, p); });
            }
            sync.arrive_and_wait();
            const Rect active = active_region(tile, t, nx, ny);
            for (index_t p = tid; p < workers; p += nthreads) {
              guarded([&] {
                compute(ws[p], counters[p], slice_geometry(tile, workers, p), active, k, ilp,
                        poison, nx, ny);
              });
            }
            sync.arrive_and_wait();
            if (probed && tid == 0)
              out.blocks[blk].steps.push_back(image(ws, tile, tile.load_region, workers));
          }
          if (probed) sync.arrive_and_wait();  // snapshot done before buffers are reused

          for (index_t p = tid; p < workers; p += nthreads) {
            guarded([&] {
              store(ws[p], counters[p], slice_geometry(tile, workers, p), tile.interior, *dst);
            });
          }
        }
        sync.arrive_and_wait();  // block output complete before it becomes input
        if (probe && tid == 0) {
          const Rect& in = plan.tiles[*probe].interior;
          TileImage img{in, {}};
          img.values.reserve(static_cast<std::size_t>(in.area()));
          for (index_t y = in.y0; y < in.y1(); ++y)
            for (index_t x = in.x0; x < in.x1(); ++x) img.values.push_back((*dst)(x, y));
          out.blocks[blk].store = std::move(img);
          out.blocks[blk].block = blk;
        }
        std::swap(src, dst);
      }
    };

    pool_.run(nthreads, body);
    if (first_error) std::rethrow_exception(first_error);

    TrafficReport& r = out.result.report;
    std::int64_t computed = 0;
    for (const auto& c : counters) {
      r.global_load_cells += c.loads;
      r.ghost_load_cells += c.ghost_loads;
      r.global_store_cells += c.stores;
      r.halo_exchanged_cells += c.halo;
      computed += c.computed;
    }
    r.useful_compute_cells = nx * ny * total_steps;
    r.redundant_compute_cells = computed - r.useful_compute_cells;
    r.scratchpad_peak_bytes = peak_bytes;
    r.elem_bytes = sizeof(double);
    out.result.grid = (blocks % 2 == 0) ? std::move(a) : std::move(b);
    return out;
  }

  static void validate(const Grid2D& grid, std::int64_t total_steps, const TilingPlan& plan,
                       const KernelConfig& cfg) {
    if (plan.depth < 1) throw std::invalid_argument("plan temporal depth must be >= 1");
    if (total_steps < 1 || total_steps % plan.depth != 0)
      throw std::invalid_argument("total_steps (" + std::to_string(total_steps) +
                                  ") must be a positive multiple of T (" +
                                  std::to_string(plan.depth) + ")");
    if (grid.nx() != plan.nx || grid.ny() != plan.ny)
      throw std::invalid_argument("plan is for " + std::to_string(plan.nx) + "x" +
                                  std::to_string(plan.ny) + " but grid is " +
                                  std::to_string(grid.nx()) + "x" + std::to_string(grid.ny()));
    if (plan.elem_bytes != sizeof(double))
      throw std::invalid_argument("engine runs double precision; plan elem_bytes must be 8");
    if (plan.device.workers < 1) throw std::invalid_argument("device needs at least one worker");
    if (cfg.ilp < 1) throw std::invalid_argument("ilp must be >= 1");
    if (plan.tiles.empty()) throw std::invalid_argument("plan has no tiles");
  }

  static void load(WorkerBuffers& w, Counters& c, const SliceGeometry& s, const Grid2D& src,
                   bool poison) {
    if (s.width == 0) return;
    for (index_t gy = s.y0; gy < s.y0 + s.rows; ++gy) {
      for (index_t gx = s.c0; gx < s.c0 + s.width; ++gx) {
        const double v = src(gx, gy);
        const auto i = s.idx(gx, gy);
        w.front[i] = v;
        w.back[i] = v;  // ghost cells must be present in both buffers
        if (src.is_ghost(gx, gy)) {
          ++c.ghost_loads;
        } else {
          ++c.loads;
        }
      }
      if (poison) {
        const double nan = std::numeric_limits<double>::signaling_NaN();
        const index_t row = (gy - s.y0) * s.stride;
        w.front[row] = w.back[row] = nan;
        w.front[row + s.width + 1] = w.back[row + s.width + 1] = nan;
      }
    }
    stage_edges(w, s);
  }

  static void compute(WorkerBuffers& w, Counters& c, const SliceGeometry& s, const Rect& active,
                      const StencilWeights& k, index_t ilp, bool poison, index_t nx,
                      index_t ny) {
    if (s.width == 0) return;
    const index_t x0 = std::max(active.x0, s.c0);
    const index_t x1 = std::min(active.x1(), s.c0 + s.width);
    if (x1 > x0 && !active.empty()) {
      const Window win{1, s.stride, s.width, s.rows};
      const Rect cols{x0 - s.c0, active.y0 - s.y0, x1 - x0, active.height};
      const auto n = static_cast<std::size_t>(s.stride * s.rows);
      j2d5pt_update(std::span<const double>(w.front.data(), n), win,
                    std::span<double>(w.back.data(), n), win, k, cols,
                    KernelConfig{static_cast<int>(ilp)});
      c.computed += cols.area();
    }
    if (poison) {
      // Everything outside the active region that is not ghost is now stale.
      const double nan = std::numeric_limits<double>::signaling_NaN();
      for (index_t gy = s.y0; gy < s.y0 + s.rows; ++gy)
        for (index_t gx = s.c0; gx < s.c0 + s.width; ++gx) {
          const bool ghost = gx == -1 || gy == -1 || gx == nx || gy == ny;
          if (!ghost && !active.contains(gx, gy)) w.back[s.idx(gx, gy)] = nan;
        }
    }
    std::swap(w.front, w.back);
    stage_edges(w, s);
  }

  static void store(const WorkerBuffers& w, Counters& c, const SliceGeometry& s,
                    const Rect& interior, Grid2D& dst) {
    if (s.width == 0) return;
    const index_t x0 = std::max(interior.x0, s.c0);
    const index_t x1 = std::min(interior.x1(), s.c0 + s.width);
    for (index_t gy = interior.y0; gy < interior.y1(); ++gy)
      for (index_t gx = x0; gx < x1; ++gx) {
        dst(gx, gy) = w.front[s.idx(gx, gy)];
        ++c.stores;
      }
  }

  static TileImage image(const std::vector<WorkerBuffers>& ws, const DeviceTile& tile,
                         const Rect& region, index_t workers) {
    TileImage img{region, std::vector<double>(static_cast<std::size_t>(region.area()))};
    for (index_t p = 0; p < workers; ++p) {
      const SliceGeometry s = slice_geometry(tile, workers, p);
      for (index_t gy = region.y0; gy < region.y1(); ++gy)
        for (index_t gx = std::max(region.x0, s.c0);
             gx < std::min(region.x1(), s.c0 + s.width); ++gx)
          img.values[static_cast<std::size_t>((gy - region.y0) * region.width +
                                              (gx - region.x0))] = ws[p].front[s.idx(gx, gy)];
    }
    return img;
  }

  EngineOptions opts_;
  WorkerPool pool_;
};

// Runs on a temporary engine with default options.
inline DtbResult run_dtb(const Grid2D& grid, const StencilWeights& weights,
                         std::int64_t total_steps, const TilingPlan& plan,
                         const KernelConfig& cfg = {}, EngineOptions opts = {}) {
  Engine engine(opts);
  return engine.run(grid, weights, total_steps, plan, cfg);
}

inline DtbTraceResult run_dtb_trace(const Grid2D& grid, const StencilWeights& weights,
                                    std::int64_t total_steps, const TilingPlan& plan,
                                    const KernelConfig& cfg, std::size_t probe,
                                    EngineOptions opts = {}) {
  Engine engine(opts);
  return engine.run_trace(grid, weights, total_steps, plan, cfg, probe);
}

}  // namespace dtb
