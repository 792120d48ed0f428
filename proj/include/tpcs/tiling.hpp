#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tpcs/point_cloud.hpp"

namespace tpcs {

// Points contributed by one sensor, with the sensor's forward vector as the
// surface orientation and the centroid of the tile's bounding box.
struct Tile {
  std::uint8_t tile_id = 0;
  Vec3 orientation;
  Vec3 bbox_centroid;
  std::vector<Point> points;
};

struct TileSet {
  std::uint32_t frame_index = 0;
  std::vector<Tile> tiles;  // ascending tile_id
};

// Sensor viewing axis in the sensor's local frame.
inline constexpr Vec3 kSensorViewAxis{0.0, 0.0, 1.0};

// Rotation applied to `local_axis`, normalized. Throws InvalidInput when the
// rotation block is not orthonormal within 1e-6.
Vec3 sensor_forward(const SensorPose& pose, const Vec3& local_axis = kSensorViewAxis);

// Partitions by sensor_id, preserving input order inside each tile. Sensors
// without points produce no tile. Throws InvalidInput when a present
// sensor_id has no pose.
TileSet tile_frame(const PointCloudFrame& frame, std::span<const SensorPose> poses,
                   const Vec3& local_axis = kSensorViewAxis);

}  // namespace tpcs
