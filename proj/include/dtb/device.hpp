#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dtb {

inline constexpr std::uint64_t kKiB = 1024;
inline constexpr std::uint64_t kMiB = 1024 * 1024;

// A GPU modeled as `workers` streaming multiprocessors, each owning a
// private scratchpad of `scratchpad_bytes_per_worker` bytes.
struct DeviceModel {
  std::string name;
  std::int64_t workers = 1;
  std::uint64_t scratchpad_bytes_per_worker = 0;

  std::uint64_t total_bytes() const noexcept {
    return static_cast<std::uint64_t>(workers) * scratchpad_bytes_per_worker;
  }

  static DeviceModel make(std::string name, std::int64_t workers,
                          std::uint64_t scratchpad_bytes_per_worker) {
    if (workers < 1)
      throw std::invalid_argument("device '" + name + "': workers must be >= 1");
    if (scratchpad_bytes_per_worker < kKiB)
      throw std::invalid_argument("device '" + name +
                                  "': scratchpad_bytes_per_worker must be >= 1024");
    return DeviceModel{std::move(name), workers, scratchpad_bytes_per_worker};
  }

  friend bool operator==(const DeviceModel&, const DeviceModel&) = default;
};

// Human-readable capacity in binary units: whole KiB counts below 1 MiB print
// as "N KB", anything else as MB with two decimals (three below 1 MiB).
inline std::string format_capacity(std::uint64_t bytes) {
  char buf[64];
  if (bytes < kMiB && bytes % kKiB == 0) {
    std::snprintf(buf, sizeof buf, "%llu KB",
                  static_cast<unsigned long long>(bytes / kKiB));
  } else if (bytes >= kMiB) {
    std::snprintf(buf, sizeof buf, "%.2f MB", static_cast<double>(bytes) / kMiB);
  } else {
    std::snprintf(buf, sizeof buf, "%.3f MB", static_cast<double>(bytes) / kMiB);
  }
  return buf;
}

// Shipped presets. Totals are the scratchpad capacities quoted for each GPU
// generation; per-worker bytes are total / SM count.
//   K20:  15 SMX x 48 KiB   = 720 KB
//   A100: 108 SM x 164 KiB  = 17.30 MB
//   H100: 132 SM, 29.83 MB total (~231 KiB per SM)
inline std::vector<DeviceModel> builtin_presets() {
  return {
      DeviceModel::make("k20", 15, 737'280 / 15),
      DeviceModel::make("a100", 108, 18'137'088 / 108),
      DeviceModel::make("h100", 132, 31'278'984 / 132),
  };
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::uint64_t parse_u64(std::string_view v, const std::string& ctx) {
  std::uint64_t out = 0;
  if (v.empty()) throw std::invalid_argument(ctx + ": empty value");
  for (char ch : v) {
    if (ch == '_' || ch == '\'') continue;
    if (ch < '0' || ch > '9') throw std::invalid_argument(ctx + ": not an integer");
    out = out * 10 + static_cast<std::uint64_t>(ch - '0');
  }
  return out;
}

}  // namespace detail

// Plain-text key/value preset file. Each `name = ...` line opens a device;
// following `workers` and `scratchpad_bytes_per_worker` (or
// `scratchpad_bytes_total`, divided evenly by workers) lines describe it.
// '#' starts a comment.
inline std::vector<DeviceModel> parse_presets(std::istream& is) {
  struct Pending {
    std::string name;
    std::optional<std::uint64_t> workers, per_worker, total;
    int line = 0;
  };
  std::vector<DeviceModel> out;
  std::optional<Pending> cur;

  auto flush = [&] {
    if (!cur) return;
    const std::string ctx = "preset '" + cur->name + "' (line " + std::to_string(cur->line) + ")";
    if (!cur->workers) throw std::invalid_argument(ctx + ": missing workers");
    if (cur->per_worker.has_value() == cur->total.has_value())
      throw std::invalid_argument(
          ctx + ": give exactly one of scratchpad_bytes_per_worker, scratchpad_bytes_total");
    const auto w = static_cast<std::int64_t>(*cur->workers);
    const std::uint64_t per = cur->per_worker ? *cur->per_worker
                                              : (w > 0 ? *cur->total / *cur->workers : 0);
    out.push_back(DeviceModel::make(cur->name, w, per));
    cur.reset();
  };

  std::string raw;
  int lineno = 0;
  while (std::getline(is, raw)) {
    ++lineno;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string ctx = "presets line " + std::to_string(lineno);
    if (eq == std::string_view::npos) throw std::invalid_argument(ctx + ": expected key = value");
    const std::string key(detail::trim(line.substr(0, eq)));
    const std::string_view val = detail::trim(line.substr(eq + 1));
    if (key == "name") {
      flush();
      if (val.empty()) throw std::invalid_argument(ctx + ": empty name");
      cur = Pending{std::string(val), {}, {}, {}, lineno};
      continue;
    }
    if (!cur) throw std::invalid_argument(ctx + ": '" + key + "' before any name");
    if (key == "workers") {
      cur->workers = detail::parse_u64(val, ctx);
    } else if (key == "scratchpad_bytes_per_worker") {
      cur->per_worker = detail::parse_u64(val, ctx);
    } else if (key == "scratchpad_bytes_total") {
      cur->total = detail::parse_u64(val, ctx);
    } else {
      throw std::invalid_argument(ctx + ": unknown key '" + key + "'");
    }
  }
  flush();
  return out;
}

inline std::vector<DeviceModel> load_presets(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open preset file " + path);
  return parse_presets(is);
}

inline std::optional<DeviceModel> find_preset(const std::vector<DeviceModel>& presets,
                                              std::string_view name) {
  for (const auto& d : presets)
    if (d.name == name) return d;
  return std::nullopt;
}

}  // namespace dtb
