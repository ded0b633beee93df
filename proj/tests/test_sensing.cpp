#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "flysim/geometry/scene_gen.hpp"
#include "flysim/sensing/camera.hpp"
#include "flysim/sensing/imu.hpp"
#include "flysim/sensing/noise.hpp"
#include "support.hpp"

using namespace flysim;
using namespace testsupport;
using Catch::Approx;

namespace {

Scene floor_plane() {
  TriMesh quad;
  quad.vertices = {Vec3(-1e3, -1e3, 0), Vec3(1e3, -1e3, 0), Vec3(1e3, 1e3, 0), Vec3(-1e3, 1e3, 0)};
  quad.triangles = {{0, 1, 2}, {0, 2, 3}};
  return Scene({{kFloorId, quad}});
}

struct Moments {
  double mean = 0.0;
  double var = 0.0;
};

template <typename T>
Moments moments(const Image<T>& img) {
  Moments m;
  for (auto v : img.data) m.mean += static_cast<double>(v);
  m.mean /= static_cast<double>(img.data.size());
  for (auto v : img.data) m.var += (static_cast<double>(v) - m.mean) * (static_cast<double>(v) - m.mean);
  m.var /= static_cast<double>(img.data.size() - 1);
  return m;
}

}  // namespace

TEST_CASE("downward camera over a floor sees constant depth") {
  const Scene s = floor_plane();
  const CameraModel cam = CameraModel::downward_facing(64, 64);
  const Pose pose{Vec3(0.3, -0.2, 2.0), quat_from_rpy(0.0, 0.0, 0.7)};
  const RenderOutput out = render(s, pose, cam);
  for (double d : out.depth.data) CHECK(std::abs(d - 2.0) <= 1e-6);
  for (auto id : out.segmentation.data) CHECK(id == static_cast<std::uint32_t>(kFloorId));
}

TEST_CASE("empty scene renders max range and background") {
  const CameraModel cam = CameraModel::forward_facing(32, 24, 1.2, 7.5);
  const RenderOutput out = render(Scene(), Pose{}, cam);
  CHECK(out.depth.width == 32);
  CHECK(out.depth.height == 24);
  for (double d : out.depth.data) CHECK(d == 7.5);
  for (auto id : out.segmentation.data) CHECK(id == 0u);
}

TEST_CASE("center pixel equals a raycast along the optical axis") {
  const Scene s = generate_cluttered_scene(3, Aabb{Vec3(0, 0, 0), Vec3(10, 10, 4)}, 0.3, {0.2, 0.6});
  CameraModel cam = CameraModel::forward_facing(15, 15);
  cam.offset_position = Vec3(0.05, 0.0, 0.02);
  Rng rng(4);
  for (int i = 0; i < 50; ++i) {
    const Pose pose{uniform3(rng, 1.0, 9.0).cwiseMin(Vec3(9, 9, 3)), random_quat(rng)};
    const DepthImage depth = render_depth(s, pose, cam);
    const Pose cam_pose = cam.world_pose(pose);
    const Vec3 axis = rotation_matrix(cam_pose.orientation).col(2);
    const auto hit = s.raycast(cam_pose.position, axis, cam.max_range);
    const double expected = hit && hit->t < cam.max_range ? hit->t : cam.max_range;
    CHECK(std::abs(depth.at(7, 7) - expected) <= 1e-9);
  }
}

TEST_CASE("sphere filling the view") {
  const Scene s({{42, Sphere{Vec3(3, 0, 0), 2.9}}});
  const SegmentationImage seg = render_segmentation(s, Pose{}, CameraModel::forward_facing(32, 32));
  for (auto id : seg.data) CHECK(id == 42u);
}

TEST_CASE("render equals per-pixel brute force") {
  const Scene s = generate_cluttered_scene(5, Aabb{Vec3(0, 0, 0), Vec3(10, 10, 4)}, 0.4, {0.2, 0.8});
  const CameraModel cam = CameraModel::forward_facing(16, 16, 1.4, 8.0);
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const Pose pose{Vec3(uniform(rng, 1, 9), uniform(rng, 1, 9), uniform(rng, 0.5, 3.5)),
                    quat_from_rpy(uniform(rng, -0.3, 0.3), uniform(rng, -0.3, 0.3), uniform(rng, -3, 3))};
    const RenderOutput out = render(s, pose, cam);
    // Independent pinhole construction: world-frame camera axes.
    const Mat3 rb = rotation_matrix(pose.orientation);
    const Vec3 forward = rb.col(0), right = -rb.col(1), down = -rb.col(2);
    const double f = 8.0 / std::tan(0.7);
    for (int v = 0; v < 16; ++v) {
      for (int u = 0; u < 16; ++u) {
        const Vec3 ray = forward + ((u + 0.5 - 8.0) / f) * right + ((v + 0.5 - 8.0) / f) * down;
        const double n = ray.norm();
        const auto hit = s.raycast_brute_force(pose.position, ray / n, 8.0 * n);
        double depth = 8.0;
        std::uint32_t id = 0;
        if (hit && hit->t / n < 8.0) {
          depth = hit->t / n;
          id = static_cast<std::uint32_t>(hit->object_id);
        }
        CHECK(out.segmentation.at(u, v) == id);
        CHECK(std::abs(out.depth.at(u, v) - depth) <= 1e-9);
      }
    }
  }
}

TEST_CASE("depth and segmentation are ray consistent") {
  const Scene s = generate_cluttered_scene(7, Aabb{Vec3(0, 0, 0), Vec3(10, 10, 4)}, 0.15, {0.2, 0.5});
  const CameraModel cam = CameraModel::forward_facing(32, 32, std::numbers::pi / 2, 6.0);
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const Pose pose{Vec3(uniform(rng, -2, 12), uniform(rng, -2, 12), uniform(rng, -1, 5)), random_quat(rng)};
    const RenderOutput out = render(s, pose, cam);
    const RenderOutput again = render(s, pose, cam);
    CHECK(out.depth == again.depth);
    CHECK(out.segmentation == again.segmentation);
    for (std::size_t i = 0; i < out.depth.data.size(); ++i) {
      const double d = out.depth.data[i];
      CHECK(d > 0.0);
      CHECK(d <= cam.max_range);
      CHECK((out.segmentation.data[i] == 0u) == (d == cam.max_range));
    }
  }
}

TEST_CASE("dynamic spheres are rendered with their ids") {
  const std::vector<DynamicSphere> agents{{Vec3(2, 0, 0), 0.15, 60001}};
  const RenderOutput out = render(Scene(), Pose{}, CameraModel::forward_facing(33, 33), agents);
  CHECK(out.segmentation.at(16, 16) == 60001u);
  CHECK(out.depth.at(16, 16) == Approx(1.85).epsilon(1e-12));
  CHECK(out.segmentation.at(0, 0) == 0u);
}

TEST_CASE("camera validation") {
  CameraModel c;
  CHECK_NOTHROW(c.validate());
  c.vertical_fov = std::numbers::pi;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = CameraModel{};
  c.width = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("IMU reads specific force and body rates") {
  const QuadParams p = QuadParams::defaults();
  const QuadState hover = QuadState::hovering(p);
  const ImuReading h = imu_read(hover, p);
  CHECK((h.specific_force_b - Vec3(0, 0, 9.81)).norm() < 1e-12);

  QuadParams nodrag = p;
  nodrag.air_density = 0.0;
  QuadState falling;
  falling.velocity_w = Vec3(1, 2, -3);
  CHECK(imu_read(falling, nodrag).specific_force_b.norm() == 0.0);

  Rng rng(9);
  for (int i = 0; i < 200; ++i) {
    const QuadState s = random_state(rng, p);
    const Wrench w = body_wrench(s, p);
    const ImuReading r = imu_read(s, w, p);
    const StateDerivative d = state_derivative(s, w, p);
    const Vec3 expected = rotation_matrix(s.orientation).transpose() * (d.velocity_dot - p.gravity);
    CHECK((r.specific_force_b - expected).norm() <= 1e-9);
    CHECK(r.angvel_b == s.angvel_b);
  }
}

TEST_CASE("IMU noise is Gaussian with configured sigmas") {
  const ImuReading clean{Vec3(0, 0, 9.81), Vec3(0.1, 0.2, 0.3)};
  ImuNoiseSpec spec;
  Rng rng(10);
  const int n = 20000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double e = apply_noise(clean, spec, rng).specific_force_b.x();
    sum += e;
    sq += e * e;
  }
  const double sd = std::sqrt(sq / n - (sum / n) * (sum / n));
  CHECK(std::abs(sum / n) <= 3.0 * 0.02 / std::sqrt(n));
  CHECK(sd == Approx(0.02).epsilon(0.05));

  spec.gyro = NoiseSpec::salt_pepper(0.1);
  CHECK_THROWS_AS(apply_noise(clean, spec, rng), InvalidNoiseForSensor);
}

TEST_CASE("zero-strength noise is the identity") {
  DepthImage img(16, 16, 1, 3.0);
  img.at(3, 4) = 1.25;
  Rng rng(11);
  CHECK(apply_noise(img, NoiseSpec::normal(0.0), rng, SensorKind::Depth) == img);
  CHECK(apply_noise(img, NoiseSpec::speckle(0.0), rng, SensorKind::Depth) == img);
  CHECK(apply_noise(img, NoiseSpec::salt_pepper(0.0), rng, SensorKind::Depth, {0.0, 10.0}) == img);
  CHECK(apply_noise(img, NoiseSpec{}, rng, SensorKind::Depth) == img);
}

TEST_CASE("salt and pepper corrupts a binomial fraction of pixels") {
  const RgbImage img(64, 64, 3, 128);
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const RgbImage out = apply_noise(img, NoiseSpec::salt_pepper(0.1), rng, SensorKind::Rgb);
    int corrupted = 0;
    for (std::size_t p = 0; p < out.pixels(); ++p) {
      const auto v = out.data[3 * p];
      if (v != 128) {
        ++corrupted;
        CHECK((v == 0 || v == 255));
        CHECK(out.data[3 * p + 1] == v);
        CHECK(out.data[3 * p + 2] == v);
      }
    }
    const double mean = 4096 * 0.1, sd = std::sqrt(4096 * 0.1 * 0.9);
    CHECK(std::abs(corrupted - mean) <= 3.0 * sd);
  }
}

TEST_CASE("Normal and Speckle moments match their specification") {
  const DepthImage img(256, 256, 1, 5.0);
  const double n = static_cast<double>(img.data.size());
  Rng rng(13);

  const double sigma = 0.05;
  const Moments a = moments(apply_noise(img, NoiseSpec::normal(sigma), rng, SensorKind::Depth));
  CHECK(std::abs(a.mean - 5.0) <= 3.0 * sigma / std::sqrt(n));
  CHECK(std::abs(a.var - sigma * sigma) <= 3.0 * sigma * sigma * std::sqrt(2.0 / (n - 1)));

  const double s = 0.1;
  const Moments b = moments(apply_noise(img, NoiseSpec::speckle(s), rng, SensorKind::Depth));
  const double sd = 5.0 * s;
  CHECK(std::abs(b.mean - 5.0) <= 3.0 * sd / std::sqrt(n));
  CHECK(std::abs(b.var - sd * sd) <= 3.0 * sd * sd * std::sqrt(2.0 / (n - 1)));
}

TEST_CASE("Poisson noise preserves the mean") {
  const Image<std::uint8_t> img(128, 128, 1, 40);
  Rng rng(14);
  const Moments m = moments(apply_noise(img, NoiseSpec::poisson(1.0), rng, SensorKind::Segmentation));
  const double n = 128.0 * 128.0;
  CHECK(std::abs(m.mean - 40.0) <= 3.0 * std::sqrt(40.0 / n));
  CHECK(m.var == Approx(40.0).epsilon(0.1));
}

TEST_CASE("RedWood depth noise") {
  DepthImage img(64, 64, 1, 2.0);
  for (int u = 0; u < 64; ++u) img.at(u, 0) = 12.0;
  Rng a(15), b(15);
  const DepthImage x = apply_noise(img, NoiseSpec::redwood(), a, SensorKind::Depth);
  const DepthImage y = apply_noise(img, NoiseSpec::redwood(), b, SensorKind::Depth);
  CHECK(x == y);
  CHECK(x.same_shape(img));
  double sum = 0.0;
  int count = 0;
  for (int v = 4; v < 64; ++v)
    for (int u = 0; u < 64; ++u) {
      CHECK(std::abs(x.at(u, v) - 2.0) < 0.1);
      sum += x.at(u, v);
      ++count;
    }
  CHECK(std::abs(sum / count - 2.0) < 0.01);
  for (int u = 0; u < 64; ++u) CHECK((x.at(u, 0) == 0.0 || x.at(u, 0) < 10.0));

  Rng rng(16);
  CHECK_THROWS_AS(apply_noise(RgbImage(4, 4, 3), NoiseSpec::redwood(), rng, SensorKind::Rgb), InvalidNoiseForSensor);
  CHECK_THROWS_AS(apply_noise(SegmentationImage(4, 4), NoiseSpec::redwood(), rng, SensorKind::Segmentation),
                  InvalidNoiseForSensor);
  CHECK_THROWS_AS(apply_noise(img, NoiseSpec::normal(1.0), rng, SensorKind::Imu), InvalidNoiseForSensor);
}

TEST_CASE("noise is deterministic under seed and preserves shape") {
  const RgbImage img(20, 10, 3, 100);
  for (const NoiseSpec& spec : {NoiseSpec::normal(5.0), NoiseSpec::poisson(0.5), NoiseSpec::salt_pepper(0.2),
                                NoiseSpec::speckle(0.2)}) {
    Rng a(17), b(17), c(18);
    const RgbImage x = apply_noise(img, spec, a, SensorKind::Rgb);
    CHECK(x == apply_noise(img, spec, b, SensorKind::Rgb));
    CHECK_FALSE(x == apply_noise(img, spec, c, SensorKind::Rgb));
    CHECK(x.same_shape(img));
  }
  NoiseSpec bad = NoiseSpec::salt_pepper(1.5);
  Rng rng(1);
  CHECK_THROWS_AS(apply_noise(img, bad, rng, SensorKind::Rgb), ConfigError);
}

TEST_CASE("16-bit image export") {
  DepthImage depth(5, 3, 1, 1.2345);
  depth.at(4, 2) = 100.0;
  const auto mm = depth_to_u16_mm(depth);
  CHECK(mm.at(0, 0) == 1235);
  CHECK(mm.at(4, 2) == 65535);
  const std::string path = "/tmp/flysim_depth_test.pgm";
  write_pgm16(path, mm);
  CHECK(read_pgm16(path) == mm);

  SegmentationImage seg(2, 2, 1, 70000);
  seg.at(0, 0) = 12;
  const auto ids = segmentation_to_u16(seg);
  CHECK(ids.at(0, 0) == 12);
  CHECK(ids.at(1, 1) == 65535);
}
