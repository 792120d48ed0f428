#pragma once

#include <array>
#include <cmath>

namespace tpcs {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  constexpr Vec3 operator-() const { return {-x, -y, -z}; }
  constexpr bool operator==(const Vec3&) const = default;

  constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
};

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

constexpr Vec3 cross(const Vec3& a, const Vec3& b)
{
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

inline double distance(const Vec3& a, const Vec3& b) { return norm(a - b); }

// Returns the zero vector unchanged.
inline Vec3 normalized(const Vec3& v)
{
  double n = norm(v);
  return n > 0.0 ? v * (1.0 / n) : v;
}

// Row-major 4x4 homogeneous transform.
using Mat4 = std::array<double, 16>;

constexpr Mat4 identity_transform()
{
  return {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};
}

inline Vec3 transform_point(const Mat4& m, const Vec3& p)
{
  return {m[0] * p.x + m[1] * p.y + m[2] * p.z + m[3],
          m[4] * p.x + m[5] * p.y + m[6] * p.z + m[7],
          m[8] * p.x + m[9] * p.y + m[10] * p.z + m[11]};
}

inline Vec3 transform_direction(const Mat4& m, const Vec3& d)
{
  return {m[0] * d.x + m[1] * d.y + m[2] * d.z,
          m[4] * d.x + m[5] * d.y + m[6] * d.z,
          m[8] * d.x + m[9] * d.y + m[10] * d.z};
}

// Builds a rigid transform from rotation columns and a translation.
inline Mat4 make_transform(const Vec3& col0, const Vec3& col1, const Vec3& col2, const Vec3& t)
{
  return {col0.x, col1.x, col2.x, t.x,
          col0.y, col1.y, col2.y, t.y,
          col0.z, col1.z, col2.z, t.z,
          0, 0, 0, 1};
}

// Rotation about +Y by `radians`, no translation.
inline Mat4 yaw_transform(double radians)
{
  double c = std::cos(radians), s = std::sin(radians);
  return {c, 0, s, 0, 0, 1, 0, 0, -s, 0, c, 0, 0, 0, 0, 1};
}

}  // namespace tpcs
