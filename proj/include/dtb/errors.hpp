#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dtb {

// Raised when a caller breaks a precondition that cannot be expressed as a
// bad argument value, e.g. aliasing input/output windows.
class contract_violation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// No tile fits the device's per-worker scratchpad.
class infeasible_plan : public std::runtime_error {
 public:
  infeasible_plan(const std::string& what, std::uint64_t min_required_bytes)
      : std::runtime_error(what), min_required_bytes_(min_required_bytes) {}

  std::uint64_t min_required_bytes() const noexcept { return min_required_bytes_; }

 private:
  std::uint64_t min_required_bytes_;
};

}  // namespace dtb
