#pragma once

// dtb command-line front end: plan, run, verify, sweep, presets, footprints.
// Exit codes: 0 success, 1 verification mismatch or I/O failure,
// 2 infeasible plan, 64 usage error.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dtb/device.hpp"
#include "dtb/engine.hpp"
#include "dtb/grid.hpp"
#include "dtb/grid_io.hpp"
#include "dtb/metrics.hpp"
#include "dtb/planner.hpp"
#include "dtb/reference.hpp"
#include "dtb/rng.hpp"

namespace dtb::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitMismatch = 1;
inline constexpr int kExitInfeasible = 2;
inline constexpr int kExitUsage = 64;

class usage_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Column order is part of the interface; tests pin it against a golden file.
inline const std::vector<std::string>& run_csv_columns() {
  static const std::vector<std::string> cols = {
      "status", "device", "workers", "scratchpad_bytes_per_worker", "nx", "ny",
      "valid_nx", "valid_ny", "t", "steps", "tiles", "tile_width", "tile_height",
      "footprint_bytes", "ilp", "threads", "seed", "global_load_cells",
      "global_store_cells", "ghost_load_cells", "halo_exchanged_cells",
      "redundant_compute_cells", "useful_compute_cells", "scratchpad_peak_bytes",
      "elem_bytes", "bit_equal", "max_abs_diff", "wall_seconds", "host_model_gflops"};
  return cols;
}

struct Options {
  index_t nx = 256;
  index_t ny = 256;
  index_t depth = 4;
  std::int64_t steps = 0;  // 0 = one time block
  std::optional<double> alpha;
  std::string weights;
  std::string device = "a100";
  std::uint64_t capacity = 0;
  index_t workers = 0;
  std::string presets;
  std::uint64_t seed = 1;
  int ilp = 4;
  unsigned threads = 0;
  std::string tile;
  std::string pruned;
  std::string format = "csv";
  std::string input;
  std::string output;
  bool poison = false;
  bool check = false;
  bool no_header = false;
  // sweep
  std::string t_list = "1,2,4,8";
  std::string devices;
  std::string domains;
  std::int64_t blocks = 1;
};

inline std::pair<index_t, index_t> parse_dims(const std::string& s, const char* what) {
  const auto x = s.find_first_of("xX");
  if (x == std::string::npos) throw usage_error(std::string(what) + " must look like WxH");
  try {
    std::size_t a = 0, b = 0;
    const long long w = std::stoll(s.substr(0, x), &a);
    const long long h = std::stoll(s.substr(x + 1), &b);
    if (a != x || b != s.size() - x - 1 || w < 1 || h < 1) throw std::invalid_argument("");
    return {w, h};
  } catch (const std::logic_error&) {
    throw usage_error(std::string(what) + " must look like WxH with positive integers, got '" + s + "'");
  }
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

inline StencilWeights resolve_weights(const Options& o) {
  if (!o.weights.empty()) {
    const auto parts = split_list(o.weights);
    if (parts.size() != 5) throw usage_error("--weights needs five values w,e,s,c,n");
    double v[5];
    for (int i = 0; i < 5; ++i) {
      try {
        v[i] = std::stod(parts[i]);
      } catch (const std::logic_error&) {
        throw usage_error("--weights value '" + parts[i] + "' is not a number");
      }
    }
    const StencilWeights k{v[0], v[1], v[2], v[3], v[4]};
    if (!k.finite()) throw usage_error("--weights must be finite");
    return k;
  }
  return StencilWeights::diffusive(o.alpha.value_or(0.2));
}

inline std::vector<DeviceModel> resolve_presets(const Options& o) {
  return o.presets.empty() ? builtin_presets() : load_presets(o.presets);
}

inline DeviceModel resolve_device(const Options& o, const std::string& name,
                                  const std::vector<DeviceModel>& presets) {
  if (o.capacity > 0) {
    try {
      return DeviceModel::make("custom", o.workers > 0 ? o.workers : 1, o.capacity);
    } catch (const std::invalid_argument& e) {
      throw usage_error(e.what());
    }
  }
  auto d = find_preset(presets, name);
  if (!d) throw usage_error("unknown device preset '" + name + "'");
  if (o.workers > 0) d->workers = o.workers;
  return *d;
}

inline TilingPlan make_plan(const Options& o, index_t nx, index_t ny, const DeviceModel& dev,
                            index_t depth) {
  if (!o.tile.empty()) {
    const auto [tw, th] = parse_dims(o.tile, "--tile");
    return plan_with_tile_size(nx, ny, dev, depth, sizeof(double), tw, th);
  }
  return plan_device_tiles(nx, ny, dev, depth, sizeof(double));
}

inline Grid2D make_grid(const Options& o, index_t nx, index_t ny) {
  if (!o.input.empty()) return load_grid(o.input);
  Xoshiro256 rng(o.seed);
  return grid_new(nx, ny, [&](index_t, index_t) { return rng.uniform(); }, 0.0);
}

inline std::int64_t resolve_steps(const Options& o, index_t depth) {
  const std::int64_t steps = o.steps > 0 ? o.steps : depth;
  if (steps % depth != 0)
    throw usage_error("--steps (" + std::to_string(steps) + ") must be a multiple of --t (" +
                      std::to_string(depth) + ")");
  return steps;
}

inline Rect resolve_valid(const Options& o, index_t nx, index_t ny) {
  if (o.pruned.empty()) return Rect{0, 0, nx, ny};
  const auto [vw, vh] = parse_dims(o.pruned, "--pruned");
  if (vw > nx || vh > ny) throw usage_error("--pruned region larger than the domain");
  return Rect{(nx - vw) / 2, (ny - vh) / 2, vw, vh};
}

inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct RunRecord {
  std::string status = "ok";
  DeviceModel device;
  index_t nx = 0, ny = 0;
  Rect valid;
  index_t depth = 0;
  std::int64_t steps = 0;
  std::optional<TilingPlan> plan;
  int ilp = 0;
  unsigned threads = 0;
  std::uint64_t seed = 0;
  std::optional<TrafficReport> report;
  std::optional<CompareReport> compare;
  double wall_seconds = 0;

  std::vector<std::string> fields() const {
    auto s = [](auto v) { return std::to_string(v); };
    std::vector<std::string> f;
    f.push_back(status);
    f.push_back(device.name);
    f.push_back(s(device.workers));
    f.push_back(s(device.scratchpad_bytes_per_worker));
    f.push_back(s(nx));
    f.push_back(s(ny));
    f.push_back(s(valid.width));
    f.push_back(s(valid.height));
    f.push_back(s(depth));
    f.push_back(s(steps));
    f.push_back(plan ? s(plan->tiles.size()) : "");
    f.push_back(plan ? s(plan->tile_width) : "");
    f.push_back(plan ? s(plan->tile_height) : "");
    f.push_back(plan ? s(plan->footprint_bytes) : "");
    f.push_back(s(ilp));
    f.push_back(s(threads));
    f.push_back(s(seed));
    if (report) {
      f.push_back(s(report->global_load_cells));
      f.push_back(s(report->global_store_cells));
      f.push_back(s(report->ghost_load_cells));
      f.push_back(s(report->halo_exchanged_cells));
      f.push_back(s(report->redundant_compute_cells));
      f.push_back(s(report->useful_compute_cells));
      f.push_back(s(report->scratchpad_peak_bytes));
      f.push_back(s(report->elem_bytes));
    } else {
      f.insert(f.end(), 8, "");
    }
    f.push_back(compare ? (compare->bit_equal ? "true" : "false") : "");
    f.push_back(compare ? fmt_double(compare->max_abs_diff) : "");
    if (report) {
      f.push_back(fmt_double(wall_seconds));
      const double flop = static_cast<double>(valid.area()) * static_cast<double>(steps) * kFlopPerCell;
      f.push_back(fmt_double(wall_seconds > 0 ? flop / wall_seconds * 1e-9 : 0.0));
    } else {
      f.insert(f.end(), 2, "");
    }
    return f;
  }
};

inline void write_csv_row(std::ostream& os, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) os << (i ? "," : "") << fields[i];
  os << "\n";
}

inline nlohmann::json rect_json(const Rect& r) {
  return {{"x0", r.x0}, {"y0", r.y0}, {"width", r.width}, {"height", r.height}};
}

inline nlohmann::json plan_json(const TilingPlan& plan) {
  nlohmann::json tiles = nlohmann::json::array();
  for (std::size_t i = 0; i < plan.tiles.size(); ++i) {
    const auto& t = plan.tiles[i];
    nlohmann::json subs = nlohmann::json::array();
    for (const auto& s : partition_subtiles(t, plan.device))
      subs.push_back({{"owner", s.owner}, {"cols", rect_json(s.cols)}});
    tiles.push_back({{"index", i},
                     {"interior", rect_json(t.interior)},
                     {"halo", t.halo},
                     {"load_region", rect_json(t.load_region)},
                     {"subtiles", subs}});
  }
  return {{"nx", plan.nx},
          {"ny", plan.ny},
          {"t", plan.depth},
          {"elem_bytes", plan.elem_bytes},
          {"device",
           {{"name", plan.device.name},
            {"workers", plan.device.workers},
            {"scratchpad_bytes_per_worker", plan.device.scratchpad_bytes_per_worker},
            {"total_bytes", plan.device.total_bytes()}}},
          {"tile_width", plan.tile_width},
          {"tile_height", plan.tile_height},
          {"footprint_bytes", plan.footprint_bytes},
          {"tiles", tiles}};
}

class App {
 public:
  App(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  int main(std::vector<std::string> args) {
    CLI::App app{"Deep temporal blocking engine for the 2D Jacobi 5-point stencil", "dtb"};
    app.require_subcommand(1);
    Options o;

    auto* verify = app.add_subcommand("verify", "run engine and oracle, compare bitwise");
    auto* run = app.add_subcommand("run", "run the engine, report timing and traffic");
    auto* plan = app.add_subcommand("plan", "print the tiling plan as JSON");
    auto* sweep = app.add_subcommand("sweep", "CSV over T x device x domain");
    auto* presets = app.add_subcommand("presets", "print the device preset table as CSV");
    auto* footprints = app.add_subcommand("footprints", "scratchpad footprint comparison as CSV");

    for (auto* sc : {verify, run, plan, footprints}) add_problem(sc, o);
    add_problem(sweep, o, /*with_domain=*/false);
    for (auto* sc : {verify, run, sweep}) add_execution(sc, o);
    presets->add_option("--presets", o.presets, "device preset file");
    for (auto* sc : {verify, run}) {
      sc->add_option("--input", o.input, "load the initial grid from a binary fixture");
      sc->add_option("--output", o.output, "write the engine result as a binary fixture");
    }
    run->add_option("--pruned", o.pruned, "centered valid region WxH used for GFLOPS");
    run->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    run->add_flag("--check", o.check, "also compare against the oracle");
    for (auto* sc : {run, sweep}) sc->add_flag("--no-header", o.no_header, "omit the CSV header");
    sweep->add_option("--t-list", o.t_list, "comma-separated temporal depths");
    sweep->add_option("--devices", o.devices, "comma-separated presets (default: --device)");
    sweep->add_option("--domains", o.domains, "comma-separated WxH list")->required();
    sweep->add_option("--blocks", o.blocks, "time blocks per run (steps = blocks * T)")
        ->check(CLI::PositiveNumber);
    sweep->add_flag("--check", o.check, "compare every cell against the oracle");

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
      app.parse(rev);
    } catch (const CLI::CallForHelp&) {
      out_ << app.help();
      return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
      out_ << app.help("", CLI::AppFormatMode::All);
      return kExitOk;
    } catch (const CLI::ParseError& e) {
      err_ << "dtb: " << e.what() << "\n";
      return kExitUsage;
    }

    try {
      if (*verify) return cmd_verify(o);
      if (*run) return cmd_run(o);
      if (*plan) return cmd_plan(o);
      if (*sweep) return cmd_sweep(o);
      if (*presets) return cmd_presets(o);
      if (*footprints) return cmd_footprints(o);
    } catch (const infeasible_plan& e) {
      err_ << "dtb: infeasible plan: " << e.what() << "\n";
      return kExitInfeasible;
    } catch (const std::invalid_argument& e) {
      err_ << "dtb: " << e.what() << "\n";
      return kExitUsage;
    } catch (const std::exception& e) {
      err_ << "dtb: " << e.what() << "\n";
      return kExitMismatch;
    }
    return kExitUsage;
  }

 private:
  static void add_problem(CLI::App* sc, Options& o, bool with_domain = true) {
    if (with_domain) {
      sc->add_option("--nx", o.nx, "interior width")->check(CLI::PositiveNumber);
      sc->add_option("--ny", o.ny, "interior height")->check(CLI::PositiveNumber);
      sc->add_option("--t", o.depth, "temporal blocking depth T")->check(CLI::PositiveNumber);
      sc->add_option("--tile", o.tile, "force the nominal tile interior WxH");
    }
    sc->add_option("--device", o.device, "device preset name");
    sc->add_option("--capacity", o.capacity, "explicit scratchpad bytes per worker");
    sc->add_option("--workers", o.workers, "worker count (overrides the preset)")
        ->check(CLI::PositiveNumber);
    sc->add_option("--presets", o.presets, "device preset file");
  }

  static void add_execution(CLI::App* sc, Options& o) {
    sc->add_option("--steps", o.steps, "total time steps, a multiple of T")
        ->check(CLI::PositiveNumber);
    auto* alpha = sc->add_option("--alpha", o.alpha, "diffusive weights: neighbours alpha, centre 1-4 alpha");
    sc->add_option("--weights", o.weights, "explicit weights w,e,s,c,n")->excludes(alpha);
    sc->add_option("--seed", o.seed, "PRNG seed for the initial grid");
    sc->add_option("--ilp", o.ilp, "rows per register block")->check(CLI::PositiveNumber);
    sc->add_option("--threads", o.threads, "physical threads (0 = all cores)");
    sc->add_flag("--poison", o.poison, "fill stale rim cells with NaN");
  }

  // Executes one configuration; `check` adds the oracle comparison.
  RunRecord execute(const Options& o, const Grid2D& grid, const DeviceModel& dev, index_t depth,
                    std::int64_t steps, const Rect& valid, bool check) {
    RunRecord rec;
    rec.device = dev;
    rec.nx = grid.nx();
    rec.ny = grid.ny();
    rec.valid = valid;
    rec.depth = depth;
    rec.steps = steps;
    rec.ilp = o.ilp;
    rec.seed = o.seed;
    rec.plan = make_plan(o, grid.nx(), grid.ny(), dev, depth);
    Engine engine(EngineOptions{o.threads, o.poison});
    rec.threads = std::min<unsigned>(engine.threads(), static_cast<unsigned>(dev.workers));
    const StencilWeights k = resolve_weights(o);
    const auto t0 = std::chrono::steady_clock::now();
    DtbResult r = engine.run(grid, k, steps, *rec.plan, KernelConfig{o.ilp});
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rec.report = r.report;
    if (check) rec.compare = grid_compare(r.grid, jacobi_reference(grid, k, steps));
    if (!o.output.empty()) save_grid(o.output, r.grid);
    return rec;
  }

  int cmd_verify(const Options& o) {
    const auto presets = resolve_presets(o);
    const DeviceModel dev = resolve_device(o, o.device, presets);
    const std::int64_t steps = resolve_steps(o, o.depth);
    const Grid2D grid = make_grid(o, o.nx, o.ny);
    const RunRecord rec = execute(o, grid, dev, o.depth, steps, grid.interior(), true);
    out_ << "bit_equal=" << (rec.compare->bit_equal ? "true" : "false")
         << " max_abs_diff=" << fmt_double(rec.compare->max_abs_diff);
    if (rec.compare->first_mismatch)
      out_ << " first_mismatch=" << rec.compare->first_mismatch->first << ","
           << rec.compare->first_mismatch->second;
    out_ << " nx=" << grid.nx() << " ny=" << grid.ny() << " t=" << o.depth << " steps=" << steps
         << " device=" << dev.name << " workers=" << dev.workers
         << " tiles=" << rec.plan->tiles.size() << "\n";
    return rec.compare->bit_equal ? kExitOk : kExitMismatch;
  }

  int cmd_run(const Options& o) {
    const auto presets = resolve_presets(o);
    const DeviceModel dev = resolve_device(o, o.device, presets);
    const std::int64_t steps = resolve_steps(o, o.depth);
    const Grid2D grid = make_grid(o, o.nx, o.ny);
    const Rect valid = resolve_valid(o, grid.nx(), grid.ny());
    const RunRecord rec = execute(o, grid, dev, o.depth, steps, valid, o.check);
    if (o.format == "json") {
      nlohmann::json j;
      const auto fields = rec.fields();
      for (std::size_t i = 0; i < fields.size(); ++i) j[run_csv_columns()[i]] = fields[i];
      out_ << j.dump(2) << "\n";
    } else {
      if (!o.no_header) write_csv_row(out_, run_csv_columns());
      write_csv_row(out_, rec.fields());
    }
    return rec.compare && !rec.compare->bit_equal ? kExitMismatch : kExitOk;
  }

  int cmd_plan(const Options& o) {
    const auto presets = resolve_presets(o);
    const DeviceModel dev = resolve_device(o, o.device, presets);
    out_ << plan_json(make_plan(o, o.nx, o.ny, dev, o.depth)).dump(2) << "\n";
    return kExitOk;
  }

  int cmd_sweep(const Options& o) {
    std::vector<index_t> depths;
    for (const auto& s : split_list(o.t_list)) {
      try {
        const long long v = std::stoll(s);
        if (v < 1) throw std::invalid_argument("");
        depths.push_back(v);
      } catch (const std::logic_error&) {
        throw usage_error("--t-list entry '" + s + "' is not a positive integer");
      }
    }
    if (depths.empty()) throw usage_error("--t-list is empty");
    std::vector<std::string> device_names = split_list(o.devices);
    if (device_names.empty()) device_names.push_back(o.device);
    std::vector<std::pair<index_t, index_t>> domains;
    for (const auto& d : split_list(o.domains)) domains.push_back(parse_dims(d, "--domains"));
    if (domains.empty()) throw usage_error("--domains is empty");
    const auto presets = resolve_presets(o);

    if (!o.no_header) write_csv_row(out_, run_csv_columns());
    int ok = 0, failed = 0;
    for (const auto& name : device_names) {
      const DeviceModel dev = resolve_device(o, name, presets);
      for (const auto& [nx, ny] : domains) {
        const Grid2D grid = make_grid(o, nx, ny);
        for (index_t depth : depths) {
          const std::int64_t steps = o.steps > 0 ? o.steps : o.blocks * depth;
          RunRecord rec;
          try {
            if (steps % depth != 0)
              throw std::invalid_argument("steps not a multiple of T");
            rec = execute(o, grid, dev, depth, steps, grid.interior(), o.check);
            if (rec.compare && !rec.compare->bit_equal) {
              rec.status = "mismatch";
              ++failed;
            } else {
              ++ok;
            }
          } catch (const infeasible_plan&) {
            rec = RunRecord{};
            rec.status = "infeasible";
          } catch (const std::invalid_argument&) {
            rec = RunRecord{};
            rec.status = "invalid";
          }
          rec.device = dev;
          rec.nx = nx;
          rec.ny = ny;
          rec.valid = Rect{0, 0, nx, ny};
          rec.depth = depth;
          rec.steps = steps;
          rec.ilp = o.ilp;
          rec.seed = o.seed;
          write_csv_row(out_, rec.fields());
        }
      }
    }
    if (failed) return kExitMismatch;
    return ok > 0 ? kExitOk : kExitInfeasible;
  }

  int cmd_presets(const Options& o) {
    out_ << "name,workers,scratchpad_bytes_per_worker,total_bytes,total\n";
    for (const auto& d : resolve_presets(o))
      out_ << d.name << "," << d.workers << "," << d.scratchpad_bytes_per_worker << ","
           << d.total_bytes() << "," << format_capacity(d.total_bytes()) << "\n";
    return kExitOk;
  }

  int cmd_footprints(const Options& o) {
    const auto presets = resolve_presets(o);
    const DeviceModel dev = resolve_device(o, o.device, presets);
    const TilingPlan plan = make_plan(o, o.nx, o.ny, dev, o.depth);
    out_ << "name,scratchpad_bytes,scratchpad\n";
    for (const auto& e : sota_footprint_table(plan))
      out_ << e.name << "," << e.scratchpad_bytes << "," << format_capacity(e.scratchpad_bytes) << "\n";
    return kExitOk;
  }

  std::ostream& out_;
  std::ostream& err_;
};

inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  return App(out, err).main(args);
}

}  // namespace dtb::cli
