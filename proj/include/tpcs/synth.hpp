#pragma once

#include <cstdint>
#include <vector>

#include "tpcs/point_cloud.hpp"

namespace tpcs {

// Vertical ellipsoid "body" with a small rigid sway animation.
struct BodyModel {
  Vec3 center{0.0, 0.0, 0.0};
  Vec3 semi_axes{0.25, 0.85, 0.15};
  double surface_noise_m = 0.002;
  double sway_deg = 5.0;
  double sway_amplitude_m = 0.01;
  double sway_period_s = 2.0;
};

struct SynthConfig {
  std::uint32_t point_count = 130000;
  std::vector<SensorPose> poses;  // empty selects default_sensor_ring(3)
  std::uint64_t seed = 7;
  std::uint32_t frame_count = 150;
  double fps = 15.0;
  // Per-frame point count varies uniformly within +/- this fraction.
  double count_jitter = 0.03;
  BodyModel body;
};

// Sensors on a horizontal circle around the origin, evenly spaced in yaw and
// looking at the center along their local +Z axis.
std::vector<SensorPose> default_sensor_ring(int count = 3, double radius_m = 2.0,
                                            double height_m = 0.3);

// Deterministic in (config, frame_index); frames can be generated in any order.
PointCloudFrame synth_frame(const SynthConfig& config, std::uint32_t frame_index);

std::vector<PointCloudFrame> synth_capture(const SynthConfig& config);

// Poses actually used by the generator for `config`.
std::vector<SensorPose> effective_poses(const SynthConfig& config);

}  // namespace tpcs
