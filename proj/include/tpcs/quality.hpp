#pragma once

#include <compare>
#include <cstdint>

namespace tpcs {

// One rung of the quality ladder: octree depth plus attribute quality.
struct QualityLevel {
  int octree_depth = 9;
  int qp = 75;

  auto operator<=>(const QualityLevel&) const = default;
};

inline constexpr int kMinOctreeDepth = 1;
inline constexpr int kMaxOctreeDepth = 16;

}  // namespace tpcs
