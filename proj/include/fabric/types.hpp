#pragma once

#include <compare>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace fabric {

/// One tick is one millisecond of virtual time.
using Tick = std::int64_t;
using Mbps = std::int64_t;
using Bits = std::int64_t;
using Vlan = std::uint16_t;

inline constexpr Tick kForever = std::numeric_limits<Tick>::max();

/// 1 Mb/s sustained for one tick.
inline constexpr Bits kBitsPerMbpsTick = 1000;

inline constexpr Vlan kMinServiceVlan = 2;
inline constexpr Vlan kMaxServiceVlan = 4094;

inline constexpr const char* kOverlayBod = "BOD";
inline constexpr const char* kOverlaySdxl2 = "SDXL2";

/// Half-open interval [start, end) of ticks.
struct Window {
  Tick start = 0;
  Tick end = 0;

  bool contains(Tick t) const { return start <= t && t < end; }
  bool overlaps(const Window& other) const {
    return start < other.end && other.start < end;
  }
  bool empty() const { return end <= start; }

  friend bool operator==(const Window&, const Window&) = default;
};

/// A logical port on a VFC.
struct PortRef {
  std::string vfc;
  std::string port;

  friend auto operator<=>(const PortRef&, const PortRef&) = default;
};

/// Link ids in traversal order.
using Path = std::vector<std::string>;

struct VlanRange {
  Vlan low = kMinServiceVlan;
  Vlan high = kMaxServiceVlan;
};

}  // namespace fabric
