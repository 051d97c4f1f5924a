#pragma once

#include <cmath>

namespace scaffold {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr double operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
  constexpr double& operator[](int axis) { return axis == 0 ? x : (axis == 1 ? y : z); }

  friend constexpr Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend constexpr Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend constexpr Vec3 operator*(double s, Vec3 v) { return {s * v.x, s * v.y, s * v.z}; }
  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;

  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

inline double norm(Vec3 v) { return std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z); }
inline double distance(Vec3 a, Vec3 b) { return norm(a - b); }

// Axis-aligned box, inclusive bounds.
struct Box {
  Vec3 min;
  Vec3 max;

  friend bool operator==(const Box&, const Box&) = default;

  bool valid() const { return min.x <= max.x && min.y <= max.y && min.z <= max.z; }
  bool contains(Vec3 p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y && p.z >= min.z &&
           p.z <= max.z;
  }
  bool contains(const Box& inner) const { return contains(inner.min) && contains(inner.max); }
  Vec3 clamp(Vec3 p) const {
    return {std::fmin(std::fmax(p.x, min.x), max.x), std::fmin(std::fmax(p.y, min.y), max.y),
            std::fmin(std::fmax(p.z, min.z), max.z)};
  }
  Vec3 center() const { return 0.5 * (min + max); }
  Vec3 extent() const { return max - min; }
};

}  // namespace scaffold
