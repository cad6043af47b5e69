#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "uir/rng.hpp"
#include "uir/tensor.hpp"

namespace uir {

enum class DegradationKind { Noise, Haze, Rain };

constexpr std::array<DegradationKind, 3> kAllKinds = {DegradationKind::Noise,
                                                      DegradationKind::Haze,
                                                      DegradationKind::Rain};

inline const char* kind_name(DegradationKind k) {
  switch (k) {
    case DegradationKind::Noise: return "noise";
    case DegradationKind::Haze: return "haze";
    case DegradationKind::Rain: return "rain";
  }
  return "?";
}

inline DegradationKind kind_from_name(const std::string& name) {
  for (DegradationKind k : kAllKinds)
    if (name == kind_name(k)) return k;
  throw ConfigError("unknown degradation kind '" + name + "' (expected noise, haze or rain)");
}

// Parameters of one degradation family. Only the fields of the active kind
// are read; the rest are ignored.
struct DegradationSpec {
  DegradationKind kind = DegradationKind::Noise;
  double noise_sigma = 25.0 / 255.0;  // Noise
  double haze_beta = 1.2;             // Haze
  double haze_airlight = 0.85;        // Haze
  double rain_density = 0.5;          // Rain
  int64_t streak_length = 12;         // Rain
  uint64_t seed = 0;

  void validate() const {
    switch (kind) {
      case DegradationKind::Noise:
        if (!(noise_sigma >= 0.0 && noise_sigma < 1.0))
          throw ConfigError("noise_sigma must lie in [0,1), got " + std::to_string(noise_sigma));
        break;
      case DegradationKind::Haze:
        if (!(haze_beta > 0.0))
          throw ConfigError("haze_beta must be positive, got " + std::to_string(haze_beta));
        if (!(haze_airlight >= 0.0 && haze_airlight <= 1.0))
          throw ConfigError("haze_airlight must lie in [0,1], got " +
                            std::to_string(haze_airlight));
        break;
      case DegradationKind::Rain:
        if (!(rain_density >= 0.0 && rain_density <= 1.0))
          throw ConfigError("rain_density must lie in [0,1], got " +
                            std::to_string(rain_density));
        if (streak_length < 1)
          throw ConfigError("streak_length must be >= 1, got " + std::to_string(streak_length));
        break;
    }
  }
};

// One (degraded, clean) training instance.
struct DegradedPair {
  Tensor degraded;  // [C,H,W] in [0,1]
  Tensor clean;     // same shape, [0,1]
  DegradationKind kind = DegradationKind::Noise;
  int64_t index = 0;
};

inline void check_image(const Tensor& img, const char* op) {
  if (img.shape().size() != 3)
    throw ShapeError(std::string(op) + ": expected [C,H,W] image, got " + shape_str(img.shape()));
  for (double v : img.values()) {
    if (!(v >= 0.0 && v <= 1.0))
      throw Error(std::string(op) + ": image value " + std::to_string(v) + " outside [0,1]");
  }
}

namespace detail {

inline double smoothstep(double e0, double e1, double x) {
  const double t = std::min(std::max((x - e0) / (e1 - e0), 0.0), 1.0);
  return t * t * (3.0 - 2.0 * t);
}

}  // namespace detail

// Procedural clean images: an oriented smooth gradient, a handful of soft
// rectangles and ellipses, and a low-frequency sinusoidal texture. All values
// land in [0,1] and are a pure function of (count, size, seed).
inline std::vector<Tensor> make_clean_corpus(int64_t count, int64_t height, int64_t width,
                                             uint64_t seed) {
  if (count < 1) throw ConfigError("corpus count must be >= 1, got " + std::to_string(count));
  if (height < 16 || width < 16)
    throw ConfigError("corpus image side must be >= 16, got " + std::to_string(height) + "x" +
                      std::to_string(width));
  std::vector<Tensor> out;
  out.reserve(static_cast<size_t>(count));
  const int64_t c = 3;
  for (int64_t i = 0; i < count; ++i) {
    Rng rng(mix_seed(seed, static_cast<uint64_t>(i)));
    Tensor img(Shape{c, height, width});
    auto& v = img.values();

    // oriented base gradient, per-channel offsets for colour
    const double theta = rng.uniform(0.0, 6.283185307179586);
    const double gx = std::cos(theta), gy = std::sin(theta);
    const double amp = rng.uniform(0.25, 0.55);
    const double base = rng.uniform(0.3, 0.6);
    double tint[3];
    for (int ch = 0; ch < 3; ++ch) tint[ch] = rng.uniform(-0.08, 0.08);
    for (int64_t ch = 0; ch < c; ++ch) {
      for (int64_t y = 0; y < height; ++y) {
        for (int64_t x = 0; x < width; ++x) {
          const double u = static_cast<double>(x) / static_cast<double>(width - 1) - 0.5;
          const double w2 = static_cast<double>(y) / static_cast<double>(height - 1) - 0.5;
          v[static_cast<size_t>((ch * height + y) * width + x)] =
              base + tint[ch] + amp * (gx * u + gy * w2);
        }
      }
    }

    // soft-edged rectangles and ellipses
    const int64_t n_shapes = 2 + static_cast<int64_t>(rng.uniform_index(4));
    for (int64_t s = 0; s < n_shapes; ++s) {
      const bool ellipse = rng.coin();
      const double cx = rng.uniform(0.1, 0.9) * static_cast<double>(width);
      const double cy = rng.uniform(0.1, 0.9) * static_cast<double>(height);
      const double rx = rng.uniform(0.08, 0.3) * static_cast<double>(width);
      const double ry = rng.uniform(0.08, 0.3) * static_cast<double>(height);
      const double edge = rng.uniform(1.0, 3.0);
      double delta[3];
      const double lum = rng.uniform(-0.45, 0.45);
      for (int ch = 0; ch < 3; ++ch) delta[ch] = lum + rng.uniform(-0.1, 0.1);
      for (int64_t y = 0; y < height; ++y) {
        for (int64_t x = 0; x < width; ++x) {
          double a;
          if (ellipse) {
            const double dx = (static_cast<double>(x) - cx) / rx;
            const double dy = (static_cast<double>(y) - cy) / ry;
            const double r = std::sqrt(dx * dx + dy * dy);
            a = 1.0 - detail::smoothstep(1.0 - edge / rx, 1.0 + edge / rx, r);
          } else {
            const double ax =
                detail::smoothstep(cx - rx - edge, cx - rx + edge, static_cast<double>(x)) *
                (1.0 - detail::smoothstep(cx + rx - edge, cx + rx + edge, static_cast<double>(x)));
            const double ay =
                detail::smoothstep(cy - ry - edge, cy - ry + edge, static_cast<double>(y)) *
                (1.0 - detail::smoothstep(cy + ry - edge, cy + ry + edge, static_cast<double>(y)));
            a = ax * ay;
          }
          if (a <= 0.0) continue;
          for (int64_t ch = 0; ch < c; ++ch)
            v[static_cast<size_t>((ch * height + y) * width + x)] += a * delta[ch];
        }
      }
    }

    // low-frequency texture
    const int64_t n_waves = 2 + static_cast<int64_t>(rng.uniform_index(2));
    for (int64_t t = 0; t < n_waves; ++t) {
      const double fx = rng.uniform(0.5, 2.5) * 6.283185307179586 / static_cast<double>(width);
      const double fy = rng.uniform(0.5, 2.5) * 6.283185307179586 / static_cast<double>(height);
      const double phase = rng.uniform(0.0, 6.283185307179586);
      const double wamp = rng.uniform(0.03, 0.1);
      for (int64_t ch = 0; ch < c; ++ch) {
        for (int64_t y = 0; y < height; ++y) {
          for (int64_t x = 0; x < width; ++x) {
            v[static_cast<size_t>((ch * height + y) * width + x)] +=
                wamp * std::sin(fx * static_cast<double>(x) + fy * static_cast<double>(y) + phase);
          }
        }
      }
    }

    for (auto& e : v) e = std::min(std::max(e, 0.0), 1.0);
    out.push_back(std::move(img));
  }
  return out;
}

// Transmission map over the fixed diagonal depth ramp d(x,y) in [0,1].
inline Tensor haze_transmission(int64_t height, int64_t width, double beta) {
  Tensor t(Shape{1, height, width});
  auto& v = t.values();
  for (int64_t y = 0; y < height; ++y) {
    for (int64_t x = 0; x < width; ++x) {
      const double d = 0.5 * (static_cast<double>(x) / static_cast<double>(width - 1) +
                              static_cast<double>(y) / static_cast<double>(height - 1));
      v[static_cast<size_t>(y * width + x)] = std::exp(-beta * d);
    }
  }
  return t;
}

// I = J*t + A*(1-t) with a per-pixel transmission map shared across channels.
inline Tensor haze_apply(const Tensor& clean, const Tensor& transmission, double airlight) {
  check_image(clean, "haze_apply");
  const int64_t c = clean.shape()[0], h = clean.shape()[1], w = clean.shape()[2];
  if (transmission.shape() != Shape{1, h, w})
    throw ShapeError("haze_apply: transmission " + shape_str(transmission.shape()) +
                     " does not match image " + shape_str(clean.shape()));
  Tensor out(clean.shape());
  const auto& cv = clean.values();
  const auto& tv = transmission.values();
  auto& ov = out.values();
  for (int64_t ch = 0; ch < c; ++ch) {
    for (int64_t i = 0; i < h * w; ++i) {
      const double t = tv[static_cast<size_t>(i)];
      ov[static_cast<size_t>(ch * h * w + i)] =
          t * cv[static_cast<size_t>(ch * h * w + i)] + airlight * (1.0 - t);
    }
  }
  return out;
}

// Additive oriented streaks; one dominant fall angle per image with a small
// per-streak jitter, brightness 0.2-0.6, applied to all channels.
inline Tensor rain_streak_mask(int64_t height, int64_t width, double density,
                               int64_t streak_length, uint64_t seed) {
  Tensor mask(Shape{1, height, width});
  auto& mv = mask.values();
  Rng rng(seed);
  const int64_t n_streaks =
      std::max<int64_t>(1, static_cast<int64_t>(std::lround(density * static_cast<double>(height * width) / 48.0)));
  const double fall = rng.uniform(-0.35, 0.35);  // radians from vertical
  for (int64_t s = 0; s < n_streaks; ++s) {
    const double x0 = rng.uniform(0.0, static_cast<double>(width));
    const double y0 = rng.uniform(0.0, static_cast<double>(height));
    const double angle = fall + rng.uniform(-0.08, 0.08);
    const double brightness = rng.uniform(0.2, 0.6);
    const double dx = std::sin(angle), dy = std::cos(angle);
    const double len = static_cast<double>(streak_length) * rng.uniform(0.7, 1.0);
    for (double t = 0.0; t < len; t += 0.5) {
      const int64_t px = static_cast<int64_t>(std::lround(x0 + t * dx));
      const int64_t py = static_cast<int64_t>(std::lround(y0 + t * dy));
      if (px < 0 || px >= width || py < 0 || py >= height) continue;
      double& m = mv[static_cast<size_t>(py * width + px)];
      m = std::max(m, brightness);
    }
  }
  return mask;
}

// Pure function of (clean, spec): the same spec on the same image always
// produces the same degraded image.
inline DegradedPair apply_degradation(const Tensor& clean, const DegradationSpec& spec) {
  check_image(clean, "apply_degradation");
  spec.validate();
  const int64_t c = clean.shape()[0], h = clean.shape()[1], w = clean.shape()[2];
  Tensor degraded(clean.shape());
  const auto& cv = clean.values();
  auto& dv = degraded.values();
  switch (spec.kind) {
    case DegradationKind::Noise: {
      Rng rng(spec.seed);
      for (size_t i = 0; i < dv.size(); ++i) {
        const double n = spec.noise_sigma == 0.0 ? 0.0 : rng.normal(0.0, spec.noise_sigma);
        dv[i] = std::min(std::max(cv[i] + n, 0.0), 1.0);
      }
      break;
    }
    case DegradationKind::Haze: {
      degraded = haze_apply(clean, haze_transmission(h, w, spec.haze_beta), spec.haze_airlight);
      break;
    }
    case DegradationKind::Rain: {
      const Tensor mask = rain_streak_mask(h, w, spec.rain_density, spec.streak_length, spec.seed);
      const auto& mv = mask.values();
      for (int64_t ch = 0; ch < c; ++ch)
        for (int64_t i = 0; i < h * w; ++i)
          dv[static_cast<size_t>(ch * h * w + i)] = std::min(
              std::max(cv[static_cast<size_t>(ch * h * w + i)] + mv[static_cast<size_t>(i)], 0.0),
              1.0);
      break;
    }
  }
  DegradedPair pair;
  pair.degraded = std::move(degraded);
  pair.clean = clean.clone();
  pair.kind = spec.kind;
  return pair;
}

// y' = clamp(y + p, 0, 1) with p iid uniform on [-0.5, 0.5], drawn fresh from
// the given seed on every call.
inline Tensor make_adversarial_target(const Tensor& clean, uint64_t seed) {
  check_image(clean, "make_adversarial_target");
  Tensor out(clean.shape());
  const auto& cv = clean.values();
  auto& ov = out.values();
  Rng rng(seed);
  for (size_t i = 0; i < ov.size(); ++i) {
    const double p = rng.uniform(-0.5, 0.5);
    ov[i] = std::min(std::max(cv[i] + p, 0.0), 1.0);
  }
  return out;
}

}  // namespace uir
