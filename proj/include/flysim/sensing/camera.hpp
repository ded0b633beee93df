#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "flysim/geometry/scene.hpp"
#include "flysim/sensing/image.hpp"

namespace flysim {

struct Pose {
  Vec3 position = Vec3::Zero();
  Quat orientation = Quat::Identity();
};

enum class DepthConvention { ZDepth };

// Pinhole camera. Camera frame: x right, y down, z along the optical axis.
// offset_rotation maps camera-frame vectors into the body frame.
struct CameraModel {
  int width = 64;
  int height = 64;
  double vertical_fov = std::numbers::pi / 2.0;
  Vec3 offset_position = Vec3::Zero();
  Quat offset_rotation = Quat::Identity();
  double max_range = 10.0;
  DepthConvention depth_convention = DepthConvention::ZDepth;

  // Optical axis along body +x, image up along body +z.
  static CameraModel forward_facing(int w = 64, int h = 64, double fov = std::numbers::pi / 2.0,
                                    double range = 10.0) {
    CameraModel c{w, h, fov};
    Mat3 r;
    r << 0, 0, 1,
        -1, 0, 0,
        0, -1, 0;
    c.offset_rotation = Quat(r);
    c.max_range = range;
    return c;
  }

  // Optical axis along body -z, image up along body +x.
  static CameraModel downward_facing(int w = 64, int h = 64, double fov = std::numbers::pi / 2.0,
                                     double range = 10.0) {
    CameraModel c{w, h, fov};
    Mat3 r;
    r << 0, -1, 0,
        -1, 0, 0,
        0, 0, -1;
    c.offset_rotation = Quat(r);
    c.max_range = range;
    return c;
  }

  double focal_px() const { return 0.5 * height / std::tan(0.5 * vertical_fov); }

  // Unnormalized camera-frame ray through the pixel center, z component 1.
  Vec3 pixel_ray(int u, int v) const {
    const double f = focal_px();
    return {(u + 0.5 - 0.5 * width) / f, (v + 0.5 - 0.5 * height) / f, 1.0};
  }

  Pose world_pose(const Pose& body) const {
    return {body.position + rotation_matrix(body.orientation) * offset_position,
            (body.orientation * offset_rotation).normalized()};
  }

  void validate() const {
    if (width < 1 || height < 1) throw ConfigError("camera width and height must be >= 1");
    if (!(vertical_fov > 0.0) || !(vertical_fov < std::numbers::pi))
      throw ConfigError("camera vertical_fov must be in (0, pi)");
    if (!(max_range > 0.0)) throw ConfigError("camera max_range must be > 0");
  }
};

// Obstacles not baked into the scene, such as other drones in a swarm.
struct DynamicSphere {
  Vec3 center;
  double radius;
  int id;
};

struct RenderOutput {
  DepthImage depth;
  SegmentationImage segmentation;
};

namespace detail {

struct PixelHit {
  double depth;
  std::uint32_t id;
};

inline PixelHit trace_pixel(const Scene& scene, std::span<const DynamicSphere> extra, const Vec3& origin,
                            const Vec3& dir, double axis_cos, double max_range) {
  const double ray_max = max_range / axis_cos;
  std::optional<RayHit> hit = scene.raycast(origin, dir, ray_max);
  for (const auto& s : extra) {
    const auto t = shapes::ray_sphere(origin, dir, s.center, s.radius);
    if (t && *t <= ray_max && (!hit || *t < hit->t || (*t == hit->t && s.id < hit->object_id)))
      hit = RayHit{*t, s.id};
  }
  if (hit) {
    const double z = hit->t * axis_cos;
    if (z < max_range) return {z, static_cast<std::uint32_t>(hit->object_id)};
  }
  return {max_range, 0u};
}

}  // namespace detail

// Z-depth and object-id images from one set of pixel-center rays. Pixels with
// no hit closer than max_range get max_range depth and id 0.
inline RenderOutput render(const Scene& scene, const Pose& body_pose, const CameraModel& camera,
                           std::span<const DynamicSphere> extra = {}, bool want_depth = true,
                           bool want_segmentation = true) {
  const Pose cam = camera.world_pose(body_pose);
  const Mat3 r = rotation_matrix(cam.orientation);
  RenderOutput out;
  if (want_depth) out.depth = DepthImage(camera.width, camera.height);
  if (want_segmentation) out.segmentation = SegmentationImage(camera.width, camera.height);
  const double f = camera.focal_px();
  for (int v = 0; v < camera.height; ++v) {
    for (int u = 0; u < camera.width; ++u) {
      const Vec3 ray((u + 0.5 - 0.5 * camera.width) / f, (v + 0.5 - 0.5 * camera.height) / f, 1.0);
      const double n = ray.norm();
      const Vec3 dir = r * (ray / n);
      const auto px = detail::trace_pixel(scene, extra, cam.position, dir, 1.0 / n, camera.max_range);
      if (want_depth) out.depth.at(u, v) = px.depth;
      if (want_segmentation) out.segmentation.at(u, v) = px.id;
    }
  }
  return out;
}

inline DepthImage render_depth(const Scene& scene, const Pose& body_pose, const CameraModel& camera,
                               std::span<const DynamicSphere> extra = {}) {
  return render(scene, body_pose, camera, extra, true, false).depth;
}

inline SegmentationImage render_segmentation(const Scene& scene, const Pose& body_pose, const CameraModel& camera,
                                             std::span<const DynamicSphere> extra = {}) {
  return render(scene, body_pose, camera, extra, false, true).segmentation;
}

}  // namespace flysim
