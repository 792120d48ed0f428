#pragma once

#include <filesystem>
#include <vector>

#include "tpcs/adaptation.hpp"

namespace tpcs::harness {

// Time-indexed viewport samples. Queries between samples interpolate the
// position linearly and the direction by normalized linear interpolation;
// queries outside the sampled range clamp to the nearest end.
class ViewportTrace {
 public:
  // Throws InvalidInput on an empty trace, non-increasing times or a zero
  // direction. Directions are normalized on construction.
  explicit ViewportTrace(std::vector<adapt::Viewport> samples);

  adapt::Viewport at(double time_ms) const;

  double start_ms() const { return samples_.front().timestamp_ms; }
  double end_ms() const { return samples_.back().timestamp_ms; }
  const std::vector<adapt::Viewport>& samples() const { return samples_; }

  // CSV with header time_ms,px,py,pz,dx,dy,dz.
  void save(const std::filesystem::path& path) const;

 private:
  std::vector<adapt::Viewport> samples_;
};

ViewportTrace load_viewport_trace(const std::filesystem::path& path);

struct OrbitSettings {
  double radius_m = 1.5;
  double eye_height_m = 0.3;
  double deg_per_s = 20.0;
  double start_deg = 0.0;
  Vec3 target{0.0, 0.0, 0.0};
  double sample_interval_ms = 100.0;
};

// Viewer circling the subject while looking at `target`, sampled up to at
// least `duration_ms`.
ViewportTrace orbit_trace(const OrbitSettings& settings, double duration_ms);

}  // namespace tpcs::harness
