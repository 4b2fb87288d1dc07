#pragma once

#include <cstdint>
#include <ostream>

namespace rangepta {

/// Closed range [lower, upper] of 1-based allocation indices. Empty iff
/// upper == lower - 1.
struct Interval {
  std::uint32_t lower = 1;
  std::uint32_t upper = 0;

  constexpr bool empty() const noexcept { return upper + 1 == lower; }
  constexpr std::uint32_t size() const noexcept { return empty() ? 0 : upper - lower + 1; }
  constexpr bool contains(std::uint32_t index) const noexcept {
    return index >= lower && index <= upper;
  }
  /// Containment between non-empty intervals (equal intervals nest both ways).
  constexpr bool isSubrangeOf(const Interval& other) const noexcept {
    return !empty() && !other.empty() && lower >= other.lower && upper <= other.upper;
  }
  constexpr bool intersects(const Interval& other) const noexcept {
    return !empty() && !other.empty() && lower <= other.upper && other.lower <= upper;
  }

  friend constexpr bool operator==(const Interval&, const Interval&) = default;
};

inline std::ostream& operator<<(std::ostream& os, const Interval& iv) {
  return os << '[' << iv.lower << ',' << iv.upper << ']';
}

}  // namespace rangepta
