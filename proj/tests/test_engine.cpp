#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "dtb/engine.hpp"
#include "dtb/metrics.hpp"
#include "dtb/reference.hpp"
#include "test_support.hpp"

namespace dtb {
namespace {

DeviceModel big_device(index_t workers) { return DeviceModel::make("big", workers, 1u << 24); }

TEST(Engine, SingleTileDepthOneIsOneStep) {
  Xoshiro256 rng(1);
  const Grid2D g = testing::random_grid(17, 13, rng);
  const StencilWeights k = testing::random_weights(rng);
  const TilingPlan plan = plan_device_tiles(17, 13, big_device(1), 1);
  ASSERT_EQ(plan.tiles.size(), 1u);
  const DtbResult r = run_dtb(g, k, 1, plan, KernelConfig{1});
  EXPECT_TRUE(grid_compare(r.grid, testing::brute_force_steps(g, k, 1)).bit_equal);
  EXPECT_TRUE(ghost_ring_equal(r.grid, g));
}

TEST(Engine, MatchesOracleAcrossWorkersAndTileSizes) {
  Xoshiro256 rng(64);
  const Grid2D g = testing::random_grid(64, 64, rng);
  const StencilWeights k = StencilWeights::diffusive(0.2);
  const Grid2D expected = testing::brute_force_steps(g, k, 8);
  ASSERT_TRUE(grid_compare(expected, jacobi_reference(g, k, 8)).bit_equal);
  Engine engine(EngineOptions{3});
  for (index_t workers : {1, 2, 3, 8}) {
    for (auto [tw, th] : {std::pair<index_t, index_t>{64, 64}, {64, 10}, {16, 16}, {7, 23}, {5, 5}}) {
      const TilingPlan plan = plan_with_tile_size(64, 64, big_device(workers), 4, 8, tw, th);
      const DtbResult r = engine.run(g, k, 8, plan, KernelConfig{4});
      const auto cmp = grid_compare(r.grid, expected);
      EXPECT_TRUE(cmp.bit_equal) << "workers=" << workers << " tile=" << tw << "x" << th
                                 << " max diff " << cmp.max_abs_diff;
    }
  }
}

TEST(Engine, PoisonedStaleCellsAreNeverRead) {
  Xoshiro256 rng(5);
  Engine engine(EngineOptions{2, true});
  for (int trial = 0; trial < 25; ++trial) {
    const index_t nx = rng.uniform_int(1, 40), ny = rng.uniform_int(1, 40);
    const Grid2D g = testing::random_grid(nx, ny, rng);
    const StencilWeights k = testing::random_weights(rng);
    const index_t depth = rng.uniform_int(1, 6);
    const TilingPlan plan = plan_with_tile_size(nx, ny, big_device(rng.uniform_int(1, 6)), depth, 8,
                                                rng.uniform_int(1, nx), rng.uniform_int(1, ny));
    const auto steps = depth * rng.uniform_int(1, 3);
    const DtbResult r = engine.run(g, k, steps, plan, KernelConfig{static_cast<int>(rng.uniform_int(1, 5))});
    ASSERT_TRUE(grid_compare(r.grid, jacobi_reference(g, k, steps)).bit_equal)
        << nx << "x" << ny << " T=" << depth << " tile " << plan.tile_width << "x" << plan.tile_height;
  }
}

TEST(Engine, SerialTileOrderDoesNotMatter) {
  Xoshiro256 rng(6);
  const Grid2D g = testing::random_grid(30, 22, rng);
  const StencilWeights k = testing::random_weights(rng);
  TilingPlan plan = plan_with_tile_size(30, 22, big_device(3), 3, 8, 8, 6);
  const Grid2D base = run_dtb(g, k, 6, plan, KernelConfig{2}).grid;
  std::reverse(plan.tiles.begin(), plan.tiles.end());
  EXPECT_TRUE(grid_compare(base, run_dtb(g, k, 6, plan, KernelConfig{2}).grid).bit_equal);
  for (int i = 0; i < 5; ++i) {
    for (std::size_t j = plan.tiles.size() - 1; j > 0; --j)
      std::swap(plan.tiles[j], plan.tiles[static_cast<std::size_t>(rng.uniform_int(0, j))]);
    EXPECT_TRUE(grid_compare(base, run_dtb(g, k, 6, plan, KernelConfig{2}).grid).bit_equal);
  }
}

TEST(Engine, ResultsIndependentOfWorkerAndThreadCount) {
  Xoshiro256 rng(7);
  const Grid2D g = testing::random_grid(45, 37, rng);
  const StencilWeights k = testing::random_weights(rng);
  const Grid2D ref =
      run_dtb(g, k, 10, plan_with_tile_size(45, 37, big_device(1), 5, 8, 20, 12), KernelConfig{1}).grid;
  for (unsigned threads : {1u, 2u, 5u}) {
    Engine engine(EngineOptions{threads});
    for (index_t workers : {1, 2, 4, 7, 13}) {
      const TilingPlan plan = plan_with_tile_size(45, 37, big_device(workers), 5, 8, 20, 12);
      const DtbResult r = engine.run(g, k, 10, plan, KernelConfig{3});
      EXPECT_TRUE(grid_compare(ref, r.grid).bit_equal) << threads << " threads, " << workers << " workers";
    }
  }
}

TEST(Engine, CountersReconcileWithModel) {
  Xoshiro256 rng(8);
  Engine engine(EngineOptions{2});
  for (int trial = 0; trial < 30; ++trial) {
    const index_t nx = rng.uniform_int(1, 50), ny = rng.uniform_int(1, 50);
    const index_t depth = rng.uniform_int(1, 5);
    const TilingPlan plan = plan_with_tile_size(nx, ny, big_device(rng.uniform_int(1, 9)), depth, 8,
                                                rng.uniform_int(1, nx), rng.uniform_int(1, ny));
    const auto steps = depth * rng.uniform_int(1, 3);
    const DtbResult r = engine.run(testing::random_grid(nx, ny, rng), StencilWeights::diffusive(0.1),
                                   steps, plan, KernelConfig{2});
    EXPECT_EQ(r.report, model_dtb_traffic(plan, steps));
  }
}

TEST(Engine, LoadsPerTileEqualLoadRegion) {
  // One block: counted loads + ghost loads cover each load region exactly once.
  const TilingPlan plan = plan_with_tile_size(20, 12, big_device(3), 2, 8, 6, 5);
  const DtbResult r = run_dtb(Grid2D(20, 12), StencilWeights{}, 2, plan, KernelConfig{1});
  std::int64_t load = 0, store = 0;
  for (const auto& t : plan.tiles) {
    load += t.load_region.area();
    store += t.interior.area();
  }
  EXPECT_EQ(r.report.global_load_cells + r.report.ghost_load_cells, load);
  EXPECT_EQ(r.report.global_store_cells, store);
  EXPECT_EQ(r.report.global_store_cells, 20 * 12);
}

TEST(Engine, PeakBufferWithinCapacity) {
  const DeviceModel dev = DeviceModel::make("d", 4, 8192);
  const TilingPlan plan = plan_device_tiles(100, 80, dev, 3);
  const DtbResult r = run_dtb(Grid2D(100, 80), StencilWeights::diffusive(0.2), 6, plan, KernelConfig{4});
  EXPECT_LE(r.report.scratchpad_peak_bytes, dev.scratchpad_bytes_per_worker);
  EXPECT_EQ(r.report.scratchpad_peak_bytes, plan.footprint_bytes);
}

TEST(Engine, CapacityAssertionFiresOnOversizedPlan) {
  TilingPlan plan = plan_with_tile_size(40, 40, big_device(2), 2, 8, 40, 40);
  plan.device.scratchpad_bytes_per_worker = 1024;  // tampered after planning
  EXPECT_THROW(run_dtb(Grid2D(40, 40), StencilWeights{}, 2, plan, KernelConfig{1}), contract_violation);
}

TEST(Engine, RejectsRaggedStepCount) {
  const TilingPlan plan = plan_device_tiles(8, 8, big_device(1), 4);
  EXPECT_THROW(run_dtb(Grid2D(8, 8), StencilWeights{}, 7, plan, KernelConfig{1}), std::invalid_argument);
  EXPECT_THROW(run_dtb(Grid2D(8, 8), StencilWeights{}, 0, plan, KernelConfig{1}), std::invalid_argument);
}

TEST(Engine, RejectsPlanGridMismatch) {
  const TilingPlan plan = plan_device_tiles(8, 8, big_device(1), 1);
  EXPECT_THROW(run_dtb(Grid2D(9, 8), StencilWeights{}, 1, plan, KernelConfig{1}), std::invalid_argument);
  EXPECT_THROW(run_dtb(Grid2D(8, 8), StencilWeights{}, 1, plan, KernelConfig{0}), std::invalid_argument);
}

TEST(Engine, EngineIsReusable) {
  Xoshiro256 rng(9);
  Engine engine(EngineOptions{2});
  for (int i = 0; i < 10; ++i) {
    const Grid2D g = testing::random_grid(12, 12, rng);
    const TilingPlan plan = plan_with_tile_size(12, 12, big_device(2), 2, 8, 5, 5);
    EXPECT_TRUE(grid_compare(engine.run(g, StencilWeights::diffusive(0.2), 4, plan, KernelConfig{1}).grid,
                             jacobi_reference(g, StencilWeights::diffusive(0.2), 4)).bit_equal);
  }
}

// --- halo exchange -----------------------------------------------------------

std::vector<WorkerBuffers> buffers_for(const DeviceTile& tile, index_t workers) {
  std::vector<WorkerBuffers> ws(static_cast<std::size_t>(workers));
  for (index_t p = 0; p < workers; ++p) {
    const SliceGeometry s = slice_geometry(tile, workers, p);
    auto& w = ws[static_cast<std::size_t>(p)];
    w.front.assign(static_cast<std::size_t>(s.stride * s.rows), -1.0);
    w.back = w.front;
    w.stage_left.assign(static_cast<std::size_t>(s.rows), 0.0);
    w.stage_right.assign(static_cast<std::size_t>(s.rows), 0.0);
  }
  return ws;
}

TEST(HaloExchange, TwoWorkersSwapEdgeColumns) {
  const DeviceTile tile{Rect{0, 0, 4, 3}, 1, Rect{-1, -1, 6, 5}};
  auto ws = buffers_for(tile, 2);
  for (index_t p = 0; p < 2; ++p) {
    const SliceGeometry s = slice_geometry(tile, 2, p);
    for (index_t gy = s.y0; gy < s.y0 + s.rows; ++gy)
      for (index_t gx = s.c0; gx < s.c0 + s.width; ++gx)
        ws[p].front[s.idx(gx, gy)] = 100.0 * gy + gx;
    stage_edges(ws[p], s);
  }
  EXPECT_EQ(exchange_halo(ws, tile, 0), 5);
  EXPECT_EQ(exchange_halo(ws, tile, 1), 5);
  const SliceGeometry s0 = slice_geometry(tile, 2, 0), s1 = slice_geometry(tile, 2, 1);
  for (index_t gy = -1; gy < 4; ++gy) {
    // worker 0's right halo column = worker 1's leftmost owned column (global x = 2)
    EXPECT_EQ(ws[0].front[s0.idx(s0.c0 + s0.width, gy)], ws[1].front[s1.idx(s1.c0, gy)]);
    EXPECT_EQ(ws[1].front[s1.idx(s1.c0 - 1, gy)], ws[0].front[s0.idx(s0.c0 + s0.width - 1, gy)]);
  }
}

TEST(HaloExchange, SingleWorkerIsNoOp) {
  const DeviceTile tile{Rect{0, 0, 4, 3}, 1, Rect{-1, -1, 6, 5}};
  auto ws = buffers_for(tile, 1);
  const auto before = ws[0].front;
  EXPECT_EQ(exchange_halo(ws, tile, 0), 0);
  EXPECT_EQ(ws[0].front, before);
}

TEST(HaloExchange, ReassembledStepMatchesSingleBuffer) {
  // k workers doing one exchange + local update equal one whole-tile update.
  Xoshiro256 rng(10);
  for (index_t workers : {2, 3, 5, 9}) {
    const DeviceTile tile{Rect{0, 0, 11, 6}, 1, Rect{-1, -1, 13, 8}};
    const Grid2D g = testing::random_grid(11, 6, rng);
    const StencilWeights k = testing::random_weights(rng);
    auto ws = buffers_for(tile, workers);
    for (index_t p = 0; p < workers; ++p) {
      const SliceGeometry s = slice_geometry(tile, workers, p);
      for (index_t gy = s.y0; gy < s.y0 + s.rows; ++gy)
        for (index_t gx = s.c0; gx < s.c0 + s.width; ++gx) ws[p].front[s.idx(gx, gy)] = g(gx, gy);
      if (s.width) stage_edges(ws[p], s);
    }
    for (index_t p = 0; p < workers; ++p) exchange_halo(ws, tile, p);
    const Grid2D expected = testing::brute_force_steps(g, k, 1);
    for (index_t p = 0; p < workers; ++p) {
      const SliceGeometry s = slice_geometry(tile, workers, p);
      const index_t x0 = std::max<index_t>(s.c0, 0), x1 = std::min<index_t>(s.c0 + s.width, 11);
      if (x1 <= x0) continue;
      const Window win{1, s.stride, s.width, s.rows};
      j2d5pt_update(ws[p].front, win, ws[p].back, win, k, Rect{x0 - s.c0, 1, x1 - x0, 6}, KernelConfig{2});
      for (index_t gy = 0; gy < 6; ++gy)
        for (index_t gx = x0; gx < x1; ++gx)
          ASSERT_TRUE(testing::bits_equal(ws[p].back[s.idx(gx, gy)], expected(gx, gy)))
              << workers << " workers at " << gx << "," << gy;
    }
  }
}

// --- trace --------------------------------------------------------------------

TEST(Trace, CardinalityPerBlock) {
  Xoshiro256 rng(11);
  const Grid2D g = testing::random_grid(20, 20, rng);
  const TilingPlan plan = plan_with_tile_size(20, 20, big_device(2), 3, 8, 8, 8);
  const auto tr = run_dtb_trace(g, StencilWeights::diffusive(0.2), 3, plan, KernelConfig{1}, 4);
  ASSERT_EQ(tr.blocks.size(), 1u);
  EXPECT_EQ(tr.blocks[0].steps.size(), 3u);
  EXPECT_EQ(tr.blocks[0].load.region, plan.tiles[4].load_region);
  EXPECT_EQ(tr.blocks[0].store.region, plan.tiles[4].interior);
  const auto tr2 = run_dtb_trace(g, StencilWeights::diffusive(0.2), 9, plan, KernelConfig{1}, 0);
  EXPECT_EQ(tr2.blocks.size(), 3u);
}

TEST(Trace, ProbeOutOfRange) {
  const TilingPlan plan = plan_with_tile_size(8, 8, big_device(1), 1, 8, 4, 4);
  EXPECT_THROW(run_dtb_trace(Grid2D(8, 8), StencilWeights{}, 1, plan, KernelConfig{1}, 4), std::out_of_range);
}

TEST(Trace, SnapshotsFollowOracleInsideValidRegion) {
  Xoshiro256 rng(12);
  const Grid2D g = testing::random_grid(24, 18, rng);
  const StencilWeights k = testing::random_weights(rng);
  const index_t depth = 4;
  const auto oracle = jacobi_reference_trace(g, k, depth, 1);
  // Single-tile plan: the whole interior stays valid at every step.
  {
    const TilingPlan plan = plan_device_tiles(24, 18, big_device(3), depth);
    ASSERT_EQ(plan.tiles.size(), 1u);
    const auto tr = run_dtb_trace(g, k, depth, plan, KernelConfig{2}, 0);
    for (index_t t = 1; t <= depth; ++t) {
      const Rect valid = intersect(dilate(g.interior(), -(depth - t)), g.interior());
      for (index_t y = valid.y0; y < valid.y1(); ++y)
        for (index_t x = valid.x0; x < valid.x1(); ++x)
          ASSERT_TRUE(testing::bits_equal(tr.blocks[0].steps[t - 1].at(x, y), oracle[t].grid(x, y)));
    }
  }
  // Multi-tile plan: the trapezoid shrinks on non-ghost sides.
  {
    const TilingPlan plan = plan_with_tile_size(24, 18, big_device(3), depth, 8, 8, 6);
    const std::size_t probe = 4;  // middle tile
    const auto tr = run_dtb_trace(g, k, depth, plan, KernelConfig{2}, probe);
    const DeviceTile& tile = plan.tiles[probe];
    for (index_t t = 1; t <= depth; ++t) {
      const Rect valid = active_region(tile, t, 24, 18);
      for (index_t y = valid.y0; y < valid.y1(); ++y)
        for (index_t x = valid.x0; x < valid.x1(); ++x)
          ASSERT_TRUE(testing::bits_equal(tr.blocks[0].steps[t - 1].at(x, y), oracle[t].grid(x, y)))
              << "t=" << t << " at " << x << "," << y;
    }
    for (index_t y = tile.interior.y0; y < tile.interior.y1(); ++y)
      for (index_t x = tile.interior.x0; x < tile.interior.x1(); ++x)
        EXPECT_TRUE(testing::bits_equal(tr.blocks[0].store.at(x, y), oracle[depth].grid(x, y)));
  }
}

TEST(Trace, SnapshotsIndependentOfWorkerCount) {
  Xoshiro256 rng(13);
  const Grid2D g = testing::random_grid(30, 16, rng);
  const StencilWeights k = testing::random_weights(rng);
  const auto base = run_dtb_trace(g, k, 3, plan_with_tile_size(30, 16, big_device(1), 3, 8, 12, 8),
                                  KernelConfig{1}, 1);
  for (index_t workers : {2, 5, 8}) {
    const auto tr = run_dtb_trace(g, k, 3, plan_with_tile_size(30, 16, big_device(workers), 3, 8, 12, 8),
                                  KernelConfig{1}, 1);
    const Rect interior = base.blocks[0].store.region;
    for (std::size_t t = 0; t < 3; ++t) {
      const Rect valid = active_region(DeviceTile{interior, 3, base.blocks[0].load.region},
                                       static_cast<index_t>(t + 1), 30, 16);
      for (index_t y = valid.y0; y < valid.y1(); ++y)
        for (index_t x = valid.x0; x < valid.x1(); ++x)
          ASSERT_TRUE(testing::bits_equal(tr.blocks[0].steps[t].at(x, y), base.blocks[0].steps[t].at(x, y)));
    }
    EXPECT_EQ(tr.blocks[0].store.values, base.blocks[0].store.values);
  }
}

}  // namespace
}  // namespace dtb
