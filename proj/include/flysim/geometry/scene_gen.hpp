#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "flysim/geometry/scene.hpp"

namespace flysim {

// Reserved ids for generated scenes.
inline constexpr int kFloorId = 1;
inline constexpr int kCeilingId = 2;
inline constexpr int kFirstWallId = 3;      // four side walls: 3..6
inline constexpr int kFirstTaskObjectId = 10;
inline constexpr int kFirstObstacleId = 100;

// Floor, ceiling and four side walls enclosing `room` from the outside.
inline std::vector<SceneObject> garage_walls(const Aabb& room, double thickness = 0.2, bool ceiling = true) {
  const Vec3 c = room.center();
  const Vec3 h = 0.5 * room.extent();
  const double t = 0.5 * thickness;
  std::vector<SceneObject> out;
  out.push_back({kFloorId, Box{Vec3(c.x(), c.y(), room.lo.z() - t), Vec3(h.x() + thickness, h.y() + thickness, t)}});
  if (ceiling)
    out.push_back(
        {kCeilingId, Box{Vec3(c.x(), c.y(), room.hi.z() + t), Vec3(h.x() + thickness, h.y() + thickness, t)}});
  out.push_back({kFirstWallId + 0, Box{Vec3(room.lo.x() - t, c.y(), c.z()), Vec3(t, h.y(), h.z())}});
  out.push_back({kFirstWallId + 1, Box{Vec3(room.hi.x() + t, c.y(), c.z()), Vec3(t, h.y(), h.z())}});
  out.push_back({kFirstWallId + 2, Box{Vec3(c.x(), room.lo.y() - t, c.z()), Vec3(h.x(), t, h.z())}});
  out.push_back({kFirstWallId + 3, Box{Vec3(c.x(), room.hi.y() + t, c.z()), Vec3(h.x(), t, h.z())}});
  return out;
}

inline Quat random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec4 v(n(rng), n(rng), n(rng), n(rng));
  v.normalize();
  return Quat(v[0], v[1], v[2], v[3]);
}

// Random convex obstacles ("stones") with a Poisson-distributed count of mean
// density * volume, placed uniformly inside `volume`.
inline std::vector<SceneObject> random_obstacles(std::uint64_t seed, const Aabb& volume, double density,
                                                 std::pair<double, double> size_range,
                                                 int first_id = kFirstObstacleId) {
  if (density < 0.0) throw ConfigError("obstacle density must be >= 0");
  if (!(size_range.first > 0.0) || size_range.second < size_range.first)
    throw ConfigError("obstacle size range must satisfy 0 < min <= max");
  std::vector<SceneObject> out;
  const double mean = density * volume.volume();
  if (mean <= 0.0) return out;
  std::mt19937_64 rng(seed);
  const int count = std::poisson_distribution<int>(mean)(rng);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> size(size_range.first, size_range.second);
  for (int i = 0; i < count; ++i) {
    const Vec3 center = volume.lo + volume.extent().cwiseProduct(Vec3(unit(rng), unit(rng), unit(rng)));
    if (unit(rng) < 0.5) {
      out.push_back({first_id + i, Sphere{center, size(rng)}});
    } else {
      const Vec3 half(size(rng), size(rng), size(rng));
      out.push_back({first_id + i, Box{center, half, random_rotation(rng)}});
    }
  }
  return out;
}

// Garage enclosing `volume` (when walls is set) filled with random obstacles.
inline Scene generate_cluttered_scene(std::uint64_t seed, const Aabb& volume, double density,
                                      std::pair<double, double> size_range, bool walls = true) {
  std::vector<SceneObject> objects;
  if (walls) objects = garage_walls(volume);
  auto obstacles = random_obstacles(seed, volume, density, size_range);
  objects.insert(objects.end(), std::make_move_iterator(obstacles.begin()), std::make_move_iterator(obstacles.end()));
  return Scene(std::move(objects));
}

}  // namespace flysim
