#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <variant>
#include <vector>

#include "flysim/math.hpp"

namespace flysim {

struct Aabb {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());

  bool empty() const { return (lo.array() > hi.array()).any(); }
  void extend(const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  void extend(const Aabb& b) {
    lo = lo.cwiseMin(b.lo);
    hi = hi.cwiseMax(b.hi);
  }
  Aabb inflated(double margin) const { return {(lo.array() - margin).matrix(), (hi.array() + margin).matrix()}; }
  Vec3 center() const { return 0.5 * (lo + hi); }
  Vec3 extent() const { return hi - lo; }
  bool contains(const Vec3& p) const { return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all(); }
  double volume() const { return empty() ? 0.0 : extent().prod(); }

  double squared_distance(const Vec3& p) const {
    const Vec3 d = (lo - p).cwiseMax(p - hi).cwiseMax(0.0);
    return d.squaredNorm();
  }
};

struct Sphere {
  Vec3 center = Vec3::Zero();
  double radius = 1.0;
};

// Oriented box; rotation maps box-local coordinates to world.
struct Box {
  Vec3 center = Vec3::Zero();
  Vec3 half_extents = Vec3::Ones();
  Quat rotation = Quat::Identity();
};

struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> triangles;
};

using Shape = std::variant<Sphere, Box, TriMesh>;

namespace shapes {

inline Vec3 closest_on_segment(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return a;
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return a + t * ab;
}

// Closest point on a triangle by Voronoi-region classification.
inline Vec3 closest_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  const Vec3 ap = p - a;
  const double d1 = ab.dot(ap);
  const double d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;

  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp);
  const double d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 && d1 - d3 > 0.0) return a + (d1 / (d1 - d3)) * ab;

  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp);
  const double d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 && d2 - d6 > 0.0) return a + (d2 / (d2 - d6)) * ac;

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && d4 - d3 >= 0.0 && d5 - d6 >= 0.0 && (d4 - d3) + (d5 - d6) > 0.0)
    return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);

  const double sum = va + vb + vc;
  if (!(sum > 0.0)) {
    // Degenerate triangle: closest of the three edges.
    const Vec3 e[3] = {closest_on_segment(p, a, b), closest_on_segment(p, b, c), closest_on_segment(p, c, a)};
    int best = 0;
    for (int i = 1; i < 3; ++i)
      if ((p - e[i]).squaredNorm() < (p - e[best]).squaredNorm()) best = i;
    return e[best];
  }
  const double v = vb / sum;
  const double w = vc / sum;
  return a + v * ab + w * ac;
}

struct SurfacePoint {
  Vec3 point;
  bool inside = false;
};

inline SurfacePoint closest_on_sphere(const Vec3& p, const Vec3& center, double radius) {
  const Vec3 d = p - center;
  const double n = d.norm();
  if (n == 0.0) return {center + Vec3(radius, 0.0, 0.0), true};
  return {center + d * (radius / n), n < radius};
}

// rot maps box-local to world.
inline SurfacePoint closest_on_box(const Vec3& p, const Vec3& center, const Vec3& half, const Mat3& rot) {
  const Vec3 local = rot.transpose() * (p - center);
  const Vec3 clamped = local.cwiseMax(-half).cwiseMin(half);
  if (clamped != local) return {center + rot * clamped, false};
  int axis = 0;
  double gap = half[0] - std::abs(local[0]);
  for (int i = 1; i < 3; ++i) {
    const double g = half[i] - std::abs(local[i]);
    if (g < gap) {
      gap = g;
      axis = i;
    }
  }
  Vec3 on_face = local;
  on_face[axis] = local[axis] < 0.0 ? -half[axis] : half[axis];
  const bool strictly_inside = (local.cwiseAbs().array() < half.array()).all();
  return {center + rot * on_face, strictly_inside};
}

inline std::optional<double> ray_sphere(const Vec3& origin, const Vec3& dir, const Vec3& center, double radius) {
  const Vec3 oc = origin - center;
  const double b = oc.dot(dir);
  const double c = oc.squaredNorm() - radius * radius;
  const double disc = b * b - c;
  if (disc < 0.0) return std::nullopt;
  const double s = std::sqrt(disc);
  const double t0 = -b - s;
  if (t0 > 0.0) return t0;
  const double t1 = -b + s;
  if (t1 > 0.0) return t1;
  return std::nullopt;
}

// Slab test in box-local coordinates.
inline std::optional<double> ray_box(const Vec3& origin, const Vec3& dir, const Vec3& center, const Vec3& half,
                                     const Mat3& rot) {
  const Vec3 o = rot.transpose() * (origin - center);
  const Vec3 d = rot.transpose() * dir;
  double t_enter = -std::numeric_limits<double>::infinity();
  double t_exit = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    if (d[i] == 0.0) {
      if (o[i] < -half[i] || o[i] > half[i]) return std::nullopt;
      continue;
    }
    const double inv = 1.0 / d[i];
    double t0 = (-half[i] - o[i]) * inv;
    double t1 = (half[i] - o[i]) * inv;
    if (t0 > t1) std::swap(t0, t1);
    t_enter = std::max(t_enter, t0);
    t_exit = std::min(t_exit, t1);
  }
  if (t_enter > t_exit || t_exit <= 0.0) return std::nullopt;
  return t_enter > 0.0 ? t_enter : t_exit;
}

// Two-sided Moller-Trumbore.
inline std::optional<double> ray_triangle(const Vec3& origin, const Vec3& dir, const Vec3& a, const Vec3& b,
                                          const Vec3& c) {
  const Vec3 e1 = b - a;
  const Vec3 e2 = c - a;
  const Vec3 pv = dir.cross(e2);
  const double det = e1.dot(pv);
  if (det == 0.0) return std::nullopt;
  const double inv = 1.0 / det;
  const Vec3 tv = origin - a;
  const double u = tv.dot(pv) * inv;
  if (u < 0.0 || u > 1.0) return std::nullopt;
  const Vec3 qv = tv.cross(e1);
  const double v = dir.dot(qv) * inv;
  if (v < 0.0 || u + v > 1.0) return std::nullopt;
  const double t = e2.dot(qv) * inv;
  if (t > 0.0) return t;
  return std::nullopt;
}

}  // namespace shapes
}  // namespace flysim
