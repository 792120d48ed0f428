#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tpcs/geometry.hpp"

namespace tpcs {

struct Color {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  constexpr bool operator==(const Color&) const = default;
};

// One fused colored sample. Positions are stored as float32, matching the
// PLY and wire layouts.
struct Point {
  std::array<float, 3> position{};
  Color color{};
  std::uint8_t sensor_id = 0;

  Vec3 pos() const { return {position[0], position[1], position[2]}; }
  bool operator==(const Point&) const = default;
};

struct PointCloudFrame {
  std::uint32_t frame_index = 0;
  double capture_timestamp_ms = 0.0;
  std::vector<Point> points;
  std::uint32_t sensor_count = 1;
};

class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Sensor-to-world rigid transform. The rotation block must be orthonormal.
struct SensorPose {
  std::uint8_t sensor_id = 0;
  Mat4 transform = identity_transform();

  Vec3 position() const { return {transform[3], transform[7], transform[11]}; }
  // Largest deviation of R^T R from the identity, plus the bottom-row error.
  double rigidity_error() const;
  bool is_rigid(double tol = 1e-6) const { return rigidity_error() <= tol; }
};

struct BoundingBox {
  Vec3 min_corner;
  Vec3 max_corner;

  bool contains(const Vec3& p) const
  {
    return p.x >= min_corner.x && p.y >= min_corner.y && p.z >= min_corner.z &&
           p.x <= max_corner.x && p.y <= max_corner.y && p.z <= max_corner.z;
  }
};

// Throws InvalidInput on an empty point list.
BoundingBox bounding_box(std::span<const Point> points);

inline Vec3 centroid(const BoundingBox& box) { return (box.min_corner + box.max_corner) * 0.5; }

// Bytes per point in the uncompressed serialization:
// 3 x float32 position, 3 x uint8 color, 1 x uint8 sensor id.
inline constexpr std::size_t kUncompressedPointBytes = 16;

void serialize_points(std::span<const Point> points, std::vector<std::uint8_t>& out);
std::vector<Point> deserialize_points(std::span<const std::uint8_t> bytes);

}  // namespace tpcs
