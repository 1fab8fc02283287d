#pragma once

// Binary grid fixture format, little-endian throughout:
//   u64 nx | u64 ny | (nx+2)*(ny+2) f64 values, row-major, ghost ring included.

#include <array>
#include <bit>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "dtb/grid.hpp"

namespace dtb {

namespace detail {

inline void put_u64_le(std::ostream& os, std::uint64_t v) {
  std::array<char, 8> b{};
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  os.write(b.data(), b.size());
}

inline std::uint64_t get_u64_le(std::istream& is) {
  std::array<unsigned char, 8> b{};
  is.read(reinterpret_cast<char*>(b.data()), b.size());
  if (!is) throw std::runtime_error("grid stream truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace detail

inline void write_grid(std::ostream& os, const Grid2D& g) {
  detail::put_u64_le(os, static_cast<std::uint64_t>(g.nx()));
  detail::put_u64_le(os, static_cast<std::uint64_t>(g.ny()));
  for (double v : g.data()) detail::put_u64_le(os, std::bit_cast<std::uint64_t>(v));
  if (!os) throw std::runtime_error("failed writing grid stream");
}

inline Grid2D read_grid(std::istream& is) {
  const std::uint64_t nx = detail::get_u64_le(is);
  const std::uint64_t ny = detail::get_u64_le(is);
  // Reject headers that cannot describe a sane in-memory grid before allocating.
  constexpr std::uint64_t kMaxDim = std::uint64_t{1} << 28;
  if (nx == 0 || ny == 0 || nx > kMaxDim || ny > kMaxDim)
    throw std::invalid_argument("grid header has invalid dimensions " +
                                std::to_string(nx) + "x" + std::to_string(ny));
  Grid2D g(static_cast<index_t>(nx), static_cast<index_t>(ny));
  for (double& v : g.data()) v = std::bit_cast<double>(detail::get_u64_le(is));
  return g;
}

inline void save_grid(const std::string& path, const Grid2D& g) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_grid(os, g);
}

inline Grid2D load_grid(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_grid(is);
}

}  // namespace dtb
