#include "tpcs/harness/viewport_trace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace tpcs::harness {

ViewportTrace::ViewportTrace(std::vector<adapt::Viewport> samples) : samples_(std::move(samples))
{
  if (samples_.empty()) throw InvalidInput("viewport trace: no samples");
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    auto& s = samples_[i];
    if (!(norm(s.orientation) > 1e-9))
      throw InvalidInput("viewport trace: zero direction vector at sample " + std::to_string(i));
    s.orientation = normalized(s.orientation);
    if (i > 0 && !(s.timestamp_ms > samples_[i - 1].timestamp_ms))
      throw InvalidInput("viewport trace: time not strictly increasing at sample " +
                         std::to_string(i));
  }
}

adapt::Viewport ViewportTrace::at(double time_ms) const
{
  if (time_ms <= samples_.front().timestamp_ms) {
    adapt::Viewport v = samples_.front();
    v.timestamp_ms = time_ms;
    return v;
  }
  if (time_ms >= samples_.back().timestamp_ms) {
    adapt::Viewport v = samples_.back();
    v.timestamp_ms = time_ms;
    return v;
  }
  auto hi = std::upper_bound(samples_.begin(), samples_.end(), time_ms,
                             [](double t, const adapt::Viewport& s) { return t < s.timestamp_ms; });
  const adapt::Viewport& b = *hi;
  const adapt::Viewport& a = *(hi - 1);
  const double w = (time_ms - a.timestamp_ms) / (b.timestamp_ms - a.timestamp_ms);
  adapt::Viewport v;
  v.timestamp_ms = time_ms;
  v.position = a.position * (1.0 - w) + b.position * w;
  Vec3 d = a.orientation * (1.0 - w) + b.orientation * w;
  // Antipodal samples interpolate through zero; hold the earlier direction.
  v.orientation = norm(d) > 1e-12 ? normalized(d) : a.orientation;
  return v;
}

void ViewportTrace::save(const std::filesystem::path& path) const
{
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write viewport trace '" + path.string() + "'");
  out << "time_ms,px,py,pz,dx,dy,dz\n";
  char buf[256];
  for (const auto& s : samples_) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", s.timestamp_ms,
                  s.position.x, s.position.y, s.position.z, s.orientation.x, s.orientation.y,
                  s.orientation.z);
    out << buf;
  }
}

ViewportTrace load_viewport_trace(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open viewport trace '" + path.string() + "'");
  std::string line;
  std::vector<adapt::Viewport> samples;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (line_no == 1 && line.rfind("time_ms", 0) == 0) continue;
    std::stringstream ss(line);
    std::string cell;
    double v[7];
    int n = 0;
    while (n < 7 && std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        v[n] = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw InvalidInput("viewport trace line " + std::to_string(line_no) + ": bad number '" +
                           cell + "'");
      }
      ++n;
    }
    if (n != 7)
      throw InvalidInput("viewport trace line " + std::to_string(line_no) + ": expected 7 columns");
    if (!(std::sqrt(v[4] * v[4] + v[5] * v[5] + v[6] * v[6]) > 1e-9))
      throw InvalidInput("viewport trace line " + std::to_string(line_no) + ": zero direction vector");
    if (!samples.empty() && !(v[0] > samples.back().timestamp_ms))
      throw InvalidInput("viewport trace line " + std::to_string(line_no) +
                         ": time not strictly increasing");
    samples.push_back({{v[1], v[2], v[3]}, {v[4], v[5], v[6]}, v[0]});
  }
  return ViewportTrace(std::move(samples));
}

ViewportTrace orbit_trace(const OrbitSettings& s, double duration_ms)
{
  if (!(s.sample_interval_ms > 0.0)) throw InvalidInput("orbit: sample interval must be positive");
  if (!(s.radius_m > 0.0)) throw InvalidInput("orbit: radius must be positive");
  std::vector<adapt::Viewport> samples;
  const auto count = static_cast<std::size_t>(std::ceil(std::max(duration_ms, 0.0) / s.sample_interval_ms)) + 1;
  for (std::size_t i = 0; i < count; ++i) {
    const double t = i * s.sample_interval_ms;
    const double psi = (s.start_deg + s.deg_per_s * t / 1000.0) * std::numbers::pi / 180.0;
    Vec3 pos{s.target.x + s.radius_m * std::sin(psi), s.eye_height_m,
             s.target.z + s.radius_m * std::cos(psi)};
    samples.push_back({pos, normalized(s.target - pos), t});
  }
  return ViewportTrace(std::move(samples));
}

}  // namespace tpcs::harness
