#include "tpcs/point_cloud.hpp"

#include <algorithm>
#include <cmath>

#include "tpcs/byte_io.hpp"

namespace tpcs {

double SensorPose::rigidity_error() const
{
  const Mat4& m = transform;
  double err = 0.0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k)
        s += m[k * 4 + i] * m[k * 4 + j];
      err = std::max(err, std::abs(s - (i == j ? 1.0 : 0.0)));
    }
  }
  err = std::max({err, std::abs(m[12]), std::abs(m[13]), std::abs(m[14]), std::abs(m[15] - 1.0)});
  for (double v : m)
    if (!std::isfinite(v))
      return INFINITY;
  return err;
}

BoundingBox bounding_box(std::span<const Point> points)
{
  if (points.empty())
    throw InvalidInput("bounding_box: empty point list");
  BoundingBox box{points[0].pos(), points[0].pos()};
  for (const Point& p : points) {
    Vec3 v = p.pos();
    box.min_corner = {std::min(box.min_corner.x, v.x), std::min(box.min_corner.y, v.y),
                      std::min(box.min_corner.z, v.z)};
    box.max_corner = {std::max(box.max_corner.x, v.x), std::max(box.max_corner.y, v.y),
                      std::max(box.max_corner.z, v.z)};
  }
  return box;
}

void serialize_points(std::span<const Point> points, std::vector<std::uint8_t>& out)
{
  out.reserve(out.size() + points.size() * kUncompressedPointBytes);
  ByteWriter w(out);
  for (const Point& p : points) {
    w.f32(p.position[0]);
    w.f32(p.position[1]);
    w.f32(p.position[2]);
    w.u8(p.color.r);
    w.u8(p.color.g);
    w.u8(p.color.b);
    w.u8(p.sensor_id);
  }
}

std::vector<Point> deserialize_points(std::span<const std::uint8_t> bytes)
{
  if (bytes.size() % kUncompressedPointBytes != 0)
    throw TruncatedBuffer("point payload length " + std::to_string(bytes.size()) +
                          " is not a multiple of 16");
  std::vector<Point> points(bytes.size() / kUncompressedPointBytes);
  ByteReader r(bytes);
  for (Point& p : points) {
    p.position = {r.f32(), r.f32(), r.f32()};
    p.color = {r.u8(), r.u8(), r.u8()};
    p.sensor_id = r.u8();
  }
  return points;
}

}  // namespace tpcs
