#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "tpcs/point_cloud.hpp"

namespace testutil {

inline tpcs::Point random_point(std::mt19937_64& rng, float lo, float hi, int sensors = 1)
{
  std::uniform_real_distribution<float> pos(lo, hi);
  std::uniform_int_distribution<int> byte(0, 255);
  std::uniform_int_distribution<int> sid(0, sensors - 1);
  tpcs::Point p;
  p.position = {pos(rng), pos(rng), pos(rng)};
  p.color = {static_cast<std::uint8_t>(byte(rng)), static_cast<std::uint8_t>(byte(rng)),
             static_cast<std::uint8_t>(byte(rng))};
  p.sensor_id = static_cast<std::uint8_t>(sid(rng));
  return p;
}

inline std::vector<tpcs::Point> random_cloud(std::mt19937_64& rng, std::size_t n, float lo = -1.0f,
                                             float hi = 1.0f, int sensors = 1)
{
  std::vector<tpcs::Point> pts;
  pts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) pts.push_back(random_point(rng, lo, hi, sensors));
  return pts;
}

// Byte-level key so multisets compare exactly, including -0.0 vs 0.0.
inline std::string point_key(const tpcs::Point& p)
{
  std::string k(16, '\0');
  std::memcpy(k.data(), p.position.data(), 12);
  k[12] = static_cast<char>(p.color.r);
  k[13] = static_cast<char>(p.color.g);
  k[14] = static_cast<char>(p.color.b);
  k[15] = static_cast<char>(p.sensor_id);
  return k;
}

inline std::vector<std::string> sorted_keys(std::span<const tpcs::Point> pts)
{
  std::vector<std::string> keys;
  keys.reserve(pts.size());
  for (const auto& p : pts) keys.push_back(point_key(p));
  std::sort(keys.begin(), keys.end());
  return keys;
}

// One-sided max over `a` of the distance to the nearest point of `b`.
inline double directed_hausdorff(std::span<const tpcs::Point> a, std::span<const tpcs::Point> b)
{
  double worst = 0.0;
  for (const auto& p : a) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : b) {
      const double dx = double(p.position[0]) - q.position[0];
      const double dy = double(p.position[1]) - q.position[1];
      const double dz = double(p.position[2]) - q.position[2];
      best = std::min(best, dx * dx + dy * dy + dz * dz);
      if (best == 0.0) break;
    }
    worst = std::max(worst, best);
  }
  return std::sqrt(worst);
}

inline double hausdorff(std::span<const tpcs::Point> a, std::span<const tpcs::Point> b)
{
  return std::max(directed_hausdorff(a, b), directed_hausdorff(b, a));
}

inline std::filesystem::path temp_dir(const std::string& name)
{
  auto dir = std::filesystem::temp_directory_path() / ("tpcs_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testutil
