// Plan a 1024 x 1024 domain on the A100 preset, advance it 16 steps with
// T = 4 and check the result against the straightforward double-buffered sweep.

#include <cmath>
#include <cstdio>

#include "dtb/device.hpp"
#include "dtb/engine.hpp"
#include "dtb/metrics.hpp"
#include "dtb/planner.hpp"
#include "dtb/reference.hpp"

int main() {
  using namespace dtb;
  const DeviceModel a100 = *find_preset(builtin_presets(), "a100");
  const TilingPlan plan = plan_device_tiles(1024, 1024, a100, 4);
  std::printf("tiles=%zu tile=%lldx%lld footprint=%llu B per worker\n", plan.tiles.size(),
              static_cast<long long>(plan.tile_width), static_cast<long long>(plan.tile_height),
              static_cast<unsigned long long>(plan.footprint_bytes));

  const Grid2D initial = grid_new(1024, 1024, [](index_t x, index_t y) {
    return std::sin(0.01 * static_cast<double>(x)) * std::cos(0.02 * static_cast<double>(y));
  });
  const StencilWeights k = StencilWeights::diffusive(0.2);

  const DtbResult r = run_dtb(initial, k, 16, plan, KernelConfig{4});
  const CompareReport cmp = grid_compare(r.grid, jacobi_reference(initial, k, 16));
  const TrafficReport naive = model_naive_traffic(1024, 1024, 16);
  std::printf("bit_equal=%s loads=%lld (naive %lld) redundant=%lld\n", cmp.bit_equal ? "true" : "false",
              static_cast<long long>(r.report.global_load_cells),
              static_cast<long long>(naive.global_load_cells),
              static_cast<long long>(r.report.redundant_compute_cells));
  return cmp.bit_equal ? 0 : 1;
}
