#pragma once

#include <array>
#include <climits>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "flysim/errors.hpp"
#include "flysim/geometry/bvh.hpp"
#include "flysim/geometry/shapes.hpp"

namespace flysim {

struct SceneObject {
  int id = 0;
  Shape shape;
};

struct ProximityResult {
  Vec3 point = Vec3::Zero();
  double distance = std::numeric_limits<double>::infinity();
  int object_id = 0;
  // Query strictly inside a solid primitive (sphere or box).
  bool inside = false;
};

struct RayHit {
  double t = 0.0;
  int object_id = 0;
};

// Immutable obstacle set with a BVH over every sphere, box and mesh triangle.
// Object ids must be unique and positive; 0 is reserved for "no object".
class Scene {
 public:
  Scene() = default;

  explicit Scene(std::vector<SceneObject> objects) : objects_(std::move(objects)) {
    std::unordered_set<int> ids;
    for (const auto& obj : objects_) {
      if (obj.id <= 0) throw ConfigError("scene object ids must be positive, got " + std::to_string(obj.id));
      if (!ids.insert(obj.id).second) throw ConfigError("duplicate scene object id " + std::to_string(obj.id));
      std::visit([&](const auto& s) { add_primitives(obj.id, s); }, obj.shape);
    }
    std::vector<Aabb> all;
    all.reserve(prims_.size());
    for (const auto& p : prims_) {
      all.push_back(p.bounds());
      bounds_.extend(all.back());
    }
    // Primitives spanning a large part of the scene (floors, walls) overlap
    // every node they would sit in; they are tested up front instead.
    const double large = kLargeFraction * half_area(bounds_);
    std::vector<Aabb> boxes;
    std::vector<std::uint32_t> in_bvh;
    for (std::uint32_t i = 0; i < prims_.size(); ++i) {
      const Aabb& b = all[i];
      if (prims_.size() >= kMinPrimitivesForSplit && half_area(b) > large) {
        large_.push_back(prims_[i]);
        continue;
      }
      const double margin = 1e-9 * (1.0 + b.lo.cwiseAbs().maxCoeff() + b.hi.cwiseAbs().maxCoeff());
      boxes.push_back(b.inflated(margin));
      in_bvh.push_back(i);
    }
    bvh_ = Bvh(boxes);
    ordered_.reserve(boxes.size());
    for (std::uint32_t i : bvh_.order()) ordered_.push_back(prims_[in_bvh[i]]);
  }

  const std::vector<SceneObject>& objects() const { return objects_; }
  const Aabb& bounds() const { return bounds_; }
  bool empty() const { return prims_.empty(); }
  std::size_t primitive_count() const { return prims_.size(); }
  std::size_t large_primitive_count() const { return large_.size(); }
  const Bvh& bvh() const { return bvh_; }

  ProximityResult nearest_point(const Vec3& query) const {
    if (empty()) throw EmptyScene();
    ProximityResult best;
    best.object_id = INT_MAX;
    for (const auto& p : large_) consider(p, query, best);
    const auto& nodes = bvh_.nodes();
    std::array<std::uint32_t, 96> stack;
    int top = 0;
    if (!nodes.empty()) stack[top++] = 0;
    while (top > 0) {
      const Bvh::Node& node = nodes[stack[--top]];
      if (node.box.squared_distance(query) > best.distance * best.distance) continue;
      if (node.leaf()) {
        for (std::uint32_t i = node.first; i < node.first + node.count; ++i) consider(ordered_[i], query, best);
        continue;
      }
      const std::uint32_t left = static_cast<std::uint32_t>(&node - nodes.data()) + 1;
      const std::uint32_t right = node.right;
      const double dl = nodes[left].box.squared_distance(query);
      const double dr = nodes[right].box.squared_distance(query);
      if (dl <= dr) {
        stack[top++] = right;
        stack[top++] = left;
      } else {
        stack[top++] = left;
        stack[top++] = right;
      }
    }
    return best;
  }

  ProximityResult nearest_point_brute_force(const Vec3& query) const {
    if (empty()) throw EmptyScene();
    ProximityResult best;
    best.object_id = INT_MAX;
    for (const auto& p : prims_) consider(p, query, best);
    return best;
  }

  // Nearest hit with t in (0, max_range]. dir must be unit length.
  std::optional<RayHit> raycast(const Vec3& origin, const Vec3& dir, double max_range) const {
    if (empty()) return std::nullopt;
    RayHit best{std::numeric_limits<double>::infinity(), INT_MAX};
    for (const auto& p : large_) consider_ray(p, origin, dir, max_range, best);
    const Vec3 inv = dir.cwiseInverse();
    const auto& nodes = bvh_.nodes();
    std::array<std::uint32_t, 96> stack;
    int top = 0;
    if (!nodes.empty() && slab(nodes[0].box, origin, inv, std::min(max_range, best.t)) <= max_range) stack[top++] = 0;
    while (top > 0) {
      const Bvh::Node& node = nodes[stack[--top]];
      if (node.leaf()) {
        for (std::uint32_t i = node.first; i < node.first + node.count; ++i)
          consider_ray(ordered_[i], origin, dir, max_range, best);
        continue;
      }
      const double limit = std::min(max_range, best.t);
      const std::uint32_t left = static_cast<std::uint32_t>(&node - nodes.data()) + 1;
      const std::uint32_t right = node.right;
      const double tl = slab(nodes[left].box, origin, inv, limit);
      const double tr = slab(nodes[right].box, origin, inv, limit);
      const bool hit_l = tl <= limit;
      const bool hit_r = tr <= limit;
      if (hit_l && hit_r) {
        if (tl <= tr) {
          stack[top++] = right;
          stack[top++] = left;
        } else {
          stack[top++] = left;
          stack[top++] = right;
        }
      } else if (hit_l) {
        stack[top++] = left;
      } else if (hit_r) {
        stack[top++] = right;
      }
    }
    if (best.object_id == INT_MAX) return std::nullopt;
    return best;
  }

  std::optional<RayHit> raycast_brute_force(const Vec3& origin, const Vec3& dir, double max_range) const {
    RayHit best{std::numeric_limits<double>::infinity(), INT_MAX};
    for (const auto& p : prims_) consider_ray(p, origin, dir, max_range, best);
    if (best.object_id == INT_MAX) return std::nullopt;
    return best;
  }

  // Sphere of the given radius touches or penetrates an obstacle: closer than
  // radius to a surface, or centered inside a solid primitive.
  bool collision_check(const Vec3& position, double radius) const {
    if (!(radius > 0.0)) throw Error("collision_check: radius must be > 0");
    const ProximityResult r = nearest_point(position);
    return r.distance < radius || r.inside;
  }

 private:
  static constexpr double kLargeFraction = 0.1;
  static constexpr std::size_t kMinPrimitivesForSplit = 16;

  static double half_area(const Aabb& b) {
    if (b.empty()) return 0.0;
    const Vec3 e = b.extent();
    return e.x() * e.y() + e.y() * e.z() + e.z() * e.x();
  }

  enum class Kind : std::uint8_t { Sphere, Box, Triangle };

  struct Primitive {
    Kind kind;
    int object_id;
    Vec3 a;  // sphere/box center, triangle vertex
    Vec3 b;  // box half extents, sphere radius in x, triangle vertex
    Vec3 c;  // triangle vertex
    Mat3 rot;

    Aabb bounds() const {
      Aabb box;
      switch (kind) {
        case Kind::Sphere:
          box.extend(a - Vec3::Constant(b.x()));
          box.extend(a + Vec3::Constant(b.x()));
          break;
        case Kind::Box: {
          const Vec3 r = rot.cwiseAbs() * b;
          box.extend(a - r);
          box.extend(a + r);
          break;
        }
        case Kind::Triangle:
          box.extend(a);
          box.extend(b);
          box.extend(c);
          break;
      }
      return box;
    }
  };

  void add_primitives(int id, const Sphere& s) {
    if (!(s.radius > 0.0) || !s.center.allFinite()) throw ConfigError("invalid sphere in object " + std::to_string(id));
    prims_.push_back({Kind::Sphere, id, s.center, Vec3(s.radius, 0.0, 0.0), Vec3::Zero(), Mat3::Identity()});
  }

  void add_primitives(int id, const Box& b) {
    if (!(b.half_extents.array() > 0.0).all() || !b.center.allFinite())
      throw ConfigError("invalid box in object " + std::to_string(id));
    prims_.push_back({Kind::Box, id, b.center, b.half_extents, Vec3::Zero(),
                      b.rotation.normalized().toRotationMatrix()});
  }

  void add_primitives(int id, const TriMesh& m) {
    if (m.triangles.empty()) throw ConfigError("mesh object " + std::to_string(id) + " has no triangles");
    for (const auto& v : m.vertices)
      if (!v.allFinite()) throw ConfigError("mesh object " + std::to_string(id) + " has non-finite vertices");
    for (const auto& t : m.triangles) {
      for (auto idx : t)
        if (idx >= m.vertices.size())
          throw ConfigError("mesh object " + std::to_string(id) + " has an out-of-range vertex index");
      prims_.push_back({Kind::Triangle, id, m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]], Mat3::Identity()});
    }
  }

  static void consider(const Primitive& p, const Vec3& query, ProximityResult& best) {
    shapes::SurfacePoint sp{Vec3::Zero(), false};
    switch (p.kind) {
      case Kind::Sphere: sp = shapes::closest_on_sphere(query, p.a, p.b.x()); break;
      case Kind::Box: sp = shapes::closest_on_box(query, p.a, p.b, p.rot); break;
      case Kind::Triangle: sp.point = shapes::closest_on_triangle(query, p.a, p.b, p.c); break;
    }
    const double d = (query - sp.point).norm();
    if (d < best.distance || (d == best.distance && p.object_id < best.object_id)) {
      best.point = sp.point;
      best.distance = d;
      best.object_id = p.object_id;
      best.inside = sp.inside;
    }
  }

  static void consider_ray(const Primitive& p, const Vec3& origin, const Vec3& dir, double max_range,
                           RayHit& best) {
    std::optional<double> t;
    switch (p.kind) {
      case Kind::Sphere: t = shapes::ray_sphere(origin, dir, p.a, p.b.x()); break;
      case Kind::Box: t = shapes::ray_box(origin, dir, p.a, p.b, p.rot); break;
      case Kind::Triangle: t = shapes::ray_triangle(origin, dir, p.a, p.b, p.c); break;
    }
    if (!t || *t > max_range) return;
    if (*t < best.t || (*t == best.t && p.object_id < best.object_id)) best = {*t, p.object_id};
  }

  // Entry distance of the ray into the box, or +inf on a miss within limit.
  static double slab(const Aabb& box, const Vec3& origin, const Vec3& inv, double limit) {
    double t_near = 0.0;
    double t_far = limit;
    for (int i = 0; i < 3; ++i) {
      double t0 = (box.lo[i] - origin[i]) * inv[i];
      double t1 = (box.hi[i] - origin[i]) * inv[i];
      if (t0 > t1) std::swap(t0, t1);
      if (t0 > t_near) t_near = t0;
      if (t1 < t_far) t_far = t1;
    }
    return t_near <= t_far ? t_near : std::numeric_limits<double>::infinity();
  }

  std::vector<SceneObject> objects_;
  std::vector<Primitive> prims_;    // construction order
  std::vector<Primitive> ordered_;  // BVH leaf order
  std::vector<Primitive> large_;    // outside the BVH
  Bvh bvh_;
  Aabb bounds_;
};

inline ProximityResult nearest_point(const Scene& scene, const Vec3& query) { return scene.nearest_point(query); }

inline std::optional<RayHit> raycast(const Scene& scene, const Vec3& origin, const Vec3& dir, double max_range) {
  return scene.raycast(origin, dir, max_range);
}

inline bool collision_check(const Scene& scene, const Vec3& position, double radius) {
  return scene.collision_check(position, radius);
}

}  // namespace flysim
