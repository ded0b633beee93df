#pragma once

#include <random>

#include "flysim/dynamics.hpp"
#include "flysim/sensing/noise.hpp"

namespace flysim {

struct ImuReading {
  Vec3 specific_force_b = Vec3::Zero();
  Vec3 angvel_b = Vec3::Zero();
};

// Accelerometer sees every non-gravitational force; gyro sees body rates.
inline ImuReading imu_read(const QuadState& state, const Wrench& wrench, const QuadParams& params) {
  return {wrench.force_b / params.mass, state.angvel_b};
}

inline ImuReading imu_read(const QuadState& state, const QuadParams& params) {
  return imu_read(state, body_wrench(state, params), params);
}

struct ImuNoiseSpec {
  NoiseSpec accel = NoiseSpec::normal(0.02);
  NoiseSpec gyro = NoiseSpec::normal(0.002);
};

inline ImuReading apply_noise(const ImuReading& reading, const ImuNoiseSpec& spec, Rng& rng) {
  for (const NoiseSpec* s : {&spec.accel, &spec.gyro}) {
    s->validate();
    check_noise_for_sensor(*s, SensorKind::Imu);
  }
  ImuReading out = reading;
  std::normal_distribution<double> n01(0.0, 1.0);
  const double sa = spec.accel.kind == NoiseKind::Normal ? spec.accel.sigma : 0.0;
  const double sg = spec.gyro.kind == NoiseKind::Normal ? spec.gyro.sigma : 0.0;
  for (int i = 0; i < 3; ++i) out.specific_force_b[i] += sa * n01(rng);
  for (int i = 0; i < 3; ++i) out.angvel_b[i] += sg * n01(rng);
  return out;
}

}  // namespace flysim
