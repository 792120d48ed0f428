#include <doctest.h>

#include <set>

#include "tpcs/synth.hpp"
#include "tpcs/tiling.hpp"

using namespace tpcs;

TEST_CASE("130k target stays within 10 percent on every frame")
{
  SynthConfig cfg;
  cfg.frame_count = 20;
  for (std::uint32_t k = 0; k < cfg.frame_count; ++k) {
    const auto f = synth_frame(cfg, k);
    CHECK(f.points.size() >= 117000);
    CHECK(f.points.size() <= 143000);
    CHECK(f.frame_index == k);
    CHECK(f.capture_timestamp_ms == doctest::Approx(k * 1000.0 / 15.0));
  }
}

TEST_CASE("same seed gives identical sequences, other seed differs")
{
  SynthConfig cfg;
  cfg.point_count = 5000;
  cfg.frame_count = 4;
  const auto a = synth_capture(cfg);
  const auto b = synth_capture(cfg);
  REQUIRE(a.size() == 4);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].points == b[i].points);
  cfg.seed = 8;
  CHECK(synth_capture(cfg)[0].points != a[0].points);
}

TEST_CASE("frames can be generated out of order")
{
  SynthConfig cfg;
  cfg.point_count = 3000;
  cfg.frame_count = 5;
  const auto seq = synth_capture(cfg);
  CHECK(synth_frame(cfg, 3).points == seq[3].points);
}

TEST_CASE("consecutive frames differ")
{
  SynthConfig cfg;
  cfg.point_count = 3000;
  CHECK(synth_frame(cfg, 0).points != synth_frame(cfg, 1).points);
}

TEST_CASE("default ring labels points with all three sensors")
{
  SynthConfig cfg;
  cfg.point_count = 20000;
  const auto f = synth_frame(cfg, 0);
  std::set<int> ids;
  for (const auto& p : f.points) ids.insert(p.sensor_id);
  CHECK(ids == std::set<int>{0, 1, 2});
  CHECK(f.sensor_count == 3);
}

TEST_CASE("each point is seen from the front by its sensor")
{
  SynthConfig cfg;
  cfg.point_count = 5000;
  const auto poses = effective_poses(cfg);
  const auto f = synth_frame(cfg, 2);
  for (const auto& p : f.points) {
    const auto& pose = poses[p.sensor_id];
    const Vec3 ray = p.pos() - pose.position();
    // the sensor looks toward the point, not away from it
    CHECK(dot(ray, sensor_forward(pose)) > 0.0);
  }
}

TEST_CASE("single sensor facing +Z labels everything sensor 0")
{
  SynthConfig cfg;
  cfg.point_count = 4000;
  SensorPose pose;
  pose.transform[11] = -2.0;  // at z = -2 looking along +Z
  cfg.poses = {pose};
  const auto f = synth_frame(cfg, 0);
  CHECK(!f.points.empty());
  for (const auto& p : f.points) CHECK(p.sensor_id == 0);
  CHECK(f.sensor_count == 1);
}

TEST_CASE("invalid generator settings")
{
  SynthConfig cfg;
  cfg.point_count = 0;
  CHECK_THROWS_AS(synth_frame(cfg, 0), InvalidInput);
  cfg.point_count = 10;
  cfg.poses = {};
  cfg.fps = 0.0;
  CHECK_THROWS_AS(synth_frame(cfg, 0), InvalidInput);
  cfg.fps = 15.0;
  SensorPose skew;
  skew.transform[1] = 0.5;
  cfg.poses = {skew};
  CHECK_THROWS_AS(synth_frame(cfg, 0), InvalidInput);
}
