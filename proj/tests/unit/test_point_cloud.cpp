#include <doctest.h>

#include "support/test_util.hpp"
#include "tpcs/point_cloud.hpp"

using namespace tpcs;

TEST_CASE("bounding box of two corners")
{
  std::vector<Point> pts(2);
  pts[1].position = {2, 2, 2};
  const auto box = bounding_box(pts);
  CHECK(box.min_corner == Vec3{0, 0, 0});
  CHECK(box.max_corner == Vec3{2, 2, 2});
  CHECK(centroid(box) == Vec3{1, 1, 1});
}

TEST_CASE("single point gives a degenerate box centered on it")
{
  Point p;
  p.position = {0.25f, -3.5f, 7.0f};
  const auto box = bounding_box(std::span<const Point>(&p, 1));
  CHECK(box.min_corner == box.max_corner);
  CHECK(centroid(box) == p.pos());
}

TEST_CASE("empty input is rejected")
{
  std::vector<Point> none;
  CHECK_THROWS_AS(bounding_box(none), InvalidInput);
}

TEST_CASE("bounding box matches a brute-force scan")
{
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto pts = testutil::random_cloud(rng, 100, -5.0f, 5.0f);
    double mn[3] = {1e30, 1e30, 1e30}, mx[3] = {-1e30, -1e30, -1e30};
    for (const auto& p : pts)
      for (int a = 0; a < 3; ++a) {
        mn[a] = std::min(mn[a], double(p.position[a]));
        mx[a] = std::max(mx[a], double(p.position[a]));
      }
    const auto box = bounding_box(pts);
    CHECK(box.min_corner == Vec3{mn[0], mn[1], mn[2]});
    CHECK(box.max_corner == Vec3{mx[0], mx[1], mx[2]});
    for (const auto& p : pts) CHECK(box.contains(p.pos()));
    CHECK(box.contains(centroid(box)));
  }
}

TEST_CASE("uncompressed serialization is 16 bytes per point and round-trips")
{
  std::mt19937_64 rng(5);
  const auto pts = testutil::random_cloud(rng, 257, -2.0f, 2.0f, 3);
  std::vector<std::uint8_t> bytes;
  serialize_points(pts, bytes);
  CHECK(bytes.size() == pts.size() * 16);
  CHECK(deserialize_points(bytes) == pts);
  bytes.pop_back();
  CHECK_THROWS(deserialize_points(bytes));
}

TEST_CASE("pose rigidity")
{
  SensorPose pose;
  CHECK(pose.is_rigid());
  pose.transform = yaw_transform(0.7);
  pose.transform[3] = 5.0;
  CHECK(pose.is_rigid());
  CHECK(pose.position() == Vec3{5.0, 0.0, 0.0});
  pose.transform[0] = 1.5;
  CHECK_FALSE(pose.is_rigid());
}
