#include "tpcs/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace tpcs {
namespace {

// splitmix64 finalizer; seeds one generator per frame.
std::uint64_t mix64(std::uint64_t z)
{
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// xoshiro256** with explicit double/normal draws, so output does not depend
// on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed)
  {
    for (auto& s : s_) s = seed = mix64(seed);
  }

  std::uint64_t next()
  {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double normal()
  {
    double u1 = 1.0 - uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4];
};

std::uint8_t clamp_u8(double v) { return static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0)); }

Color body_color(const Vec3& local, const Vec3& axes, Rng& rng)
{
  double h = local.y / axes.y;
  double r, g, b;
  if (h > 0.6) {
    r = 224, g = 172, b = 140;  // head
  } else if (h > -0.15) {
    r = 40, g = 90, b = 160;  // shirt
  } else {
    r = 60, g = 60, b = 72;  // trousers
  }
  // Printed pattern on the front of the shirt.
  if (local.z > 0.0 && h > -0.15 && h <= 0.6) {
    double stripe = 0.5 + 0.5 * std::sin(60.0 * local.y) * std::cos(45.0 * local.x);
    r += 120.0 * stripe;
    g += 60.0 * stripe;
  }
  double n = 10.0 * (rng.uniform() - 0.5);
  return {clamp_u8(r + n), clamp_u8(g + n), clamp_u8(b + n)};
}

void validate(const SynthConfig& config, const std::vector<SensorPose>& poses)
{
  if (poses.empty()) throw InvalidInput("synth_capture: at least one sensor required");
  if (poses.size() > 255) throw InvalidInput("synth_capture: at most 255 sensors");
  if (config.point_count == 0) throw InvalidInput("synth_capture: point_count must be positive");
  if (!(config.fps > 0.0)) throw InvalidInput("synth_capture: fps must be positive");
  for (std::size_t i = 0; i < poses.size(); ++i) {
    if (poses[i].sensor_id != i)
      throw InvalidInput("synth_capture: sensor ids must be 0..S-1 in order");
    if (!poses[i].is_rigid()) throw InvalidInput("synth_capture: sensor pose is not rigid");
  }
  const Vec3& a = config.body.semi_axes;
  if (!(a.x > 0 && a.y > 0 && a.z > 0)) throw InvalidInput("synth_capture: bad body semi-axes");
}

}  // namespace

std::vector<SensorPose> default_sensor_ring(int count, double radius_m, double height_m)
{
  std::vector<SensorPose> poses;
  for (int i = 0; i < count; ++i) {
    double phi = 2.0 * std::numbers::pi * i / count;
    Vec3 position{radius_m * std::sin(phi), height_m, radius_m * std::cos(phi)};
    Vec3 forward = normalized(Vec3{-std::sin(phi), 0.0, -std::cos(phi)});
    Vec3 up{0.0, 1.0, 0.0};
    Vec3 right = cross(up, forward);
    poses.push_back({static_cast<std::uint8_t>(i), make_transform(right, up, forward, position)});
  }
  return poses;
}

std::vector<SensorPose> effective_poses(const SynthConfig& config)
{
  return config.poses.empty() ? default_sensor_ring(3) : config.poses;
}

PointCloudFrame synth_frame(const SynthConfig& config, std::uint32_t frame_index)
{
  const std::vector<SensorPose> poses = effective_poses(config);
  validate(config, poses);
  const BodyModel& body = config.body;
  const Vec3 axes = body.semi_axes;
  Rng rng(mix64(config.seed) ^ mix64(0xf00dULL + frame_index));

  const double t_s = frame_index / config.fps;
  const double phase = 2.0 * std::numbers::pi * t_s / body.sway_period_s;
  const double yaw = body.sway_deg * std::numbers::pi / 180.0 * std::sin(phase);
  Mat4 motion = yaw_transform(yaw);
  motion[3] = body.center.x + body.sway_amplitude_m * std::sin(phase);
  motion[7] = body.center.y;
  motion[11] = body.center.z;

  std::vector<Vec3> sensor_pos, sensor_fwd;
  for (const SensorPose& p : poses) {
    sensor_pos.push_back(p.position());
    sensor_fwd.push_back(normalized(transform_direction(p.transform, {0, 0, 1})));
  }

  const double jitter = config.count_jitter * (2.0 * rng.uniform() - 1.0);
  const auto target = static_cast<std::size_t>(
      std::max(1.0, std::round(config.point_count * (1.0 + jitter))));
  const double min_axis = std::min({axes.x, axes.y, axes.z});

  PointCloudFrame frame;
  frame.frame_index = frame_index;
  frame.capture_timestamp_ms = frame_index * 1000.0 / config.fps;
  frame.sensor_count = static_cast<std::uint32_t>(poses.size());
  frame.points.reserve(target);

  const std::size_t max_attempts = 50 * target + 1000;
  std::size_t attempts = 0;
  while (frame.points.size() < target) {
    if (++attempts > max_attempts)
      throw InvalidInput("synth_capture: sensors do not see the body surface");
    // Uniform direction, then area-weighted rejection onto the ellipsoid.
    double uz = 2.0 * rng.uniform() - 1.0;
    double az = 2.0 * std::numbers::pi * rng.uniform();
    double rxy = std::sqrt(std::max(0.0, 1.0 - uz * uz));
    Vec3 u{rxy * std::cos(az), uz, rxy * std::sin(az)};
    Vec3 grad{u.x / axes.x, u.y / axes.y, u.z / axes.z};
    double g = norm(grad);
    if (rng.uniform() >= g * min_axis) continue;

    Vec3 n_local = grad * (1.0 / g);
    Vec3 local{axes.x * u.x, axes.y * u.y, axes.z * u.z};
    Vec3 noisy = local + n_local * (body.surface_noise_m * rng.normal());
    Vec3 world = transform_point(motion, noisy);
    Vec3 normal = transform_direction(motion, n_local);

    int best = -1;
    double best_cos = 0.0;
    for (std::size_t s = 0; s < poses.size(); ++s) {
      Vec3 to_sensor = sensor_pos[s] - world;
      if (dot(sensor_fwd[s], world - sensor_pos[s]) <= 0.0) continue;
      double c = dot(normal, normalized(to_sensor));
      if (c > best_cos) {
        best_cos = c;
        best = static_cast<int>(s);
      }
    }
    Color color = body_color(local, axes, rng);
    if (best < 0) continue;

    Point p;
    p.position = {static_cast<float>(world.x), static_cast<float>(world.y),
                  static_cast<float>(world.z)};
    p.color = color;
    p.sensor_id = static_cast<std::uint8_t>(best);
    frame.points.push_back(p);
  }
  return frame;
}

std::vector<PointCloudFrame> synth_capture(const SynthConfig& config)
{
  validate(config, effective_poses(config));
  std::vector<PointCloudFrame> frames;
  frames.reserve(config.frame_count);
  for (std::uint32_t i = 0; i < config.frame_count; ++i) frames.push_back(synth_frame(config, i));
  return frames;
}

}  // namespace tpcs
