#include "tpcs/tiling.hpp"

#include <array>
#include <optional>
#include <string>

namespace tpcs {

Vec3 sensor_forward(const SensorPose& pose, const Vec3& local_axis)
{
  if (!pose.is_rigid(1e-6))
    throw InvalidInput("sensor_forward: pose of sensor " + std::to_string(pose.sensor_id) +
                       " has a non-orthonormal rotation block");
  return normalized(transform_direction(pose.transform, local_axis));
}

TileSet tile_frame(const PointCloudFrame& frame, std::span<const SensorPose> poses,
                   const Vec3& local_axis)
{
  std::array<std::vector<Point>, 256> buckets;
  for (const Point& p : frame.points) buckets[p.sensor_id].push_back(p);

  std::array<std::optional<SensorPose>, 256> by_id;
  for (const SensorPose& pose : poses) by_id[pose.sensor_id] = pose;

  TileSet set;
  set.frame_index = frame.frame_index;
  for (int id = 0; id < 256; ++id) {
    if (buckets[id].empty()) continue;
    if (!by_id[id])
      throw InvalidInput("tile_frame: no pose for sensor " + std::to_string(id));
    Tile tile;
    tile.tile_id = static_cast<std::uint8_t>(id);
    tile.orientation = sensor_forward(*by_id[id], local_axis);
    tile.bbox_centroid = centroid(bounding_box(buckets[id]));
    tile.points = std::move(buckets[id]);
    set.tiles.push_back(std::move(tile));
  }
  return set;
}

}  // namespace tpcs
