#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <type_traits>

#include "flysim/errors.hpp"
#include "flysim/sensing/image.hpp"

namespace flysim {

enum class NoiseKind { None, Normal, Poisson, SaltPepper, Speckle, RedWood };
enum class SensorKind { Imu, Rgb, Depth, Segmentation };

inline const char* to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::None: return "none";
    case NoiseKind::Normal: return "normal";
    case NoiseKind::Poisson: return "poisson";
    case NoiseKind::SaltPepper: return "salt_pepper";
    case NoiseKind::Speckle: return "speckle";
    case NoiseKind::RedWood: return "redwood";
  }
  return "?";
}

inline NoiseKind noise_kind_from_string(const std::string& s) {
  for (auto k : {NoiseKind::None, NoiseKind::Normal, NoiseKind::Poisson, NoiseKind::SaltPepper, NoiseKind::Speckle,
                 NoiseKind::RedWood})
    if (s == to_string(k)) return k;
  throw ConfigError("unknown noise kind '" + s + "'");
}

inline const char* to_string(SensorKind k) {
  switch (k) {
    case SensorKind::Imu: return "imu";
    case SensorKind::Rgb: return "rgb";
    case SensorKind::Depth: return "depth";
    case SensorKind::Segmentation: return "segmentation";
  }
  return "?";
}

struct NoiseSpec {
  NoiseKind kind = NoiseKind::None;
  double sigma = 0.0;          // Normal: additive std-dev; Speckle: multiplicative std-dev
  double probability = 0.0;    // SaltPepper: fraction of corrupted pixels
  double salt_ratio = 0.5;     // SaltPepper: share of corrupted pixels set to the maximum
  double poisson_scale = 1.0;  // Poisson: counts per unit of value
  double redwood_multiplier = 1.0;

  static NoiseSpec normal(double s) { return {NoiseKind::Normal, s}; }
  static NoiseSpec speckle(double s) { return {NoiseKind::Speckle, s}; }
  static NoiseSpec salt_pepper(double p) { return {NoiseKind::SaltPepper, 0.0, p}; }
  static NoiseSpec poisson(double scale) {
    NoiseSpec n{NoiseKind::Poisson};
    n.poisson_scale = scale;
    return n;
  }
  static NoiseSpec redwood(double multiplier = 1.0) {
    NoiseSpec n{NoiseKind::RedWood};
    n.redwood_multiplier = multiplier;
    return n;
  }

  void validate() const {
    if (!(sigma >= 0.0)) throw ConfigError("noise sigma must be >= 0");
    if (!(probability >= 0.0 && probability <= 1.0)) throw ConfigError("noise probability must be in [0, 1]");
    if (!(salt_ratio >= 0.0 && salt_ratio <= 1.0)) throw ConfigError("noise salt_ratio must be in [0, 1]");
    if (!(poisson_scale > 0.0)) throw ConfigError("noise poisson_scale must be > 0");
    if (!(redwood_multiplier >= 0.0)) throw ConfigError("noise redwood_multiplier must be >= 0");
  }
};

inline void check_noise_for_sensor(const NoiseSpec& spec, SensorKind sensor) {
  const bool ok = spec.kind == NoiseKind::None ||
                  (sensor == SensorKind::Imu ? spec.kind == NoiseKind::Normal
                                             : spec.kind != NoiseKind::RedWood || sensor == SensorKind::Depth);
  if (!ok) throw InvalidNoiseForSensor(to_string(spec.kind), to_string(sensor));
}

// Value range an image noise op clamps into.
struct ValueRange {
  double lo;
  double hi;
};

template <typename T>
ValueRange default_range(SensorKind sensor) {
  if constexpr (std::is_integral_v<T>) {
    (void)sensor;
    return {static_cast<double>(std::numeric_limits<T>::min()), static_cast<double>(std::numeric_limits<T>::max())};
  } else {
    if (sensor == SensorKind::Rgb) return {0.0, 1.0};
    return {0.0, std::numeric_limits<double>::infinity()};
  }
}

namespace detail {

template <typename T>
T store(double v, const ValueRange& r) {
  v = std::clamp(v, r.lo, r.hi);
  if constexpr (std::is_integral_v<T>) return static_cast<T>(std::lround(v));
  else return static_cast<T>(v);
}

// Disparity-domain depth noise after the structured-light sensor model used
// for the RedWood scans: per-pixel sub-pixel jitter, 2x block sampling,
// Gaussian disparity noise and 1/8-pixel disparity quantization.
inline DepthImage redwood(const DepthImage& in, double mult, Rng& rng) {
  constexpr double kBaselineFocal = 35.130;
  constexpr double kDisparitySigma = 0.027778;
  constexpr double kJitterSigma = 0.25;
  constexpr double kCutoff = 10.0;
  std::normal_distribution<double> n01(0.0, 1.0);
  DepthImage out(in.width, in.height, in.channels);
  for (int j = 0; j < in.height; ++j) {
    for (int i = 0; i < in.width; ++i) {
      const double ny = n01(rng), nx = n01(rng), nd = n01(rng);
      const int y = static_cast<int>(std::clamp(j + ny * kJitterSigma * mult, 0.0, in.height - 1.0) + 0.5);
      const int x = static_cast<int>(std::clamp(i + nx * kJitterSigma * mult, 0.0, in.width - 1.0) + 0.5);
      for (int c = 0; c < in.channels; ++c) {
        const double d = in.at(x - x % 2, y - y % 2, c);
        double v = 0.0;
        if (d > 0.0 && d < kCutoff) {
          const double denom = std::round((kBaselineFocal / d + nd * kDisparitySigma * mult) * 8.0);
          if (denom > 1e-5) v = kBaselineFocal * 8.0 / denom;
        }
        out.at(i, j, c) = v;
      }
    }
  }
  return out;
}

}  // namespace detail

// Applies one noise model to an image. Output values are clamped into
// `range`. RedWood marks dropped pixels with depth 0.
template <typename T>
Image<T> apply_noise(const Image<T>& image, const NoiseSpec& spec, Rng& rng, SensorKind sensor,
                     ValueRange range) {
  spec.validate();
  if (sensor == SensorKind::Imu) throw InvalidNoiseForSensor(to_string(spec.kind), "image from imu");
  check_noise_for_sensor(spec, sensor);
  Image<T> out = image;
  switch (spec.kind) {
    case NoiseKind::None: break;
    case NoiseKind::Normal: {
      if (spec.sigma == 0.0) break;
      std::normal_distribution<double> n(0.0, spec.sigma);
      for (auto& v : out.data) v = detail::store<T>(static_cast<double>(v) + n(rng), range);
      break;
    }
    case NoiseKind::Speckle: {
      if (spec.sigma == 0.0) break;
      std::normal_distribution<double> n(0.0, spec.sigma);
      for (auto& v : out.data) v = detail::store<T>(static_cast<double>(v) * (1.0 + n(rng)), range);
      break;
    }
    case NoiseKind::Poisson: {
      for (auto& v : out.data) {
        const double mean = static_cast<double>(v) * spec.poisson_scale;
        const double draw = mean > 0.0 ? static_cast<double>(std::poisson_distribution<long long>(mean)(rng)) : 0.0;
        v = detail::store<T>(draw / spec.poisson_scale, range);
      }
      break;
    }
    case NoiseKind::SaltPepper: {
      if (spec.probability == 0.0) break;
      if (!std::isfinite(range.lo) || !std::isfinite(range.hi))
        throw ConfigError("salt_pepper noise needs a finite value range");
      std::uniform_real_distribution<double> u(0.0, 1.0);
      const T salt = detail::store<T>(range.hi, range);
      const T pepper = detail::store<T>(range.lo, range);
      for (std::size_t p = 0; p < out.pixels(); ++p) {
        if (u(rng) >= spec.probability) continue;
        const T value = u(rng) < spec.salt_ratio ? salt : pepper;
        for (int c = 0; c < out.channels; ++c) out.data[p * out.channels + c] = value;
      }
      break;
    }
    case NoiseKind::RedWood: {
      if constexpr (std::is_same_v<T, double>) {
        out = detail::redwood(image, spec.redwood_multiplier, rng);
      } else {
        throw InvalidNoiseForSensor("redwood", "non-metric image");
      }
      break;
    }
  }
  return out;
}

template <typename T>
Image<T> apply_noise(const Image<T>& image, const NoiseSpec& spec, Rng& rng, SensorKind sensor) {
  return apply_noise(image, spec, rng, sensor, default_range<T>(sensor));
}

}  // namespace flysim
