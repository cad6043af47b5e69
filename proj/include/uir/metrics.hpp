#pragma once

#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "uir/degrade.hpp"
#include "uir/model.hpp"
#include "uir/tensor.hpp"

namespace uir {

// Reports cap out here instead of going to infinity on a zero-MSE pair.
constexpr double kPsnrCap = 120.0;

// 10*log10(1/MSE) over [0,1]-clamped values.
inline double psnr(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "psnr");
  const auto& av = a.values();
  const auto& bv = b.values();
  double mse = 0.0;
  for (size_t i = 0; i < av.size(); ++i) {
    const double x = std::min(std::max(av[i], 0.0), 1.0);
    const double y = std::min(std::max(bv[i], 0.0), 1.0);
    mse += (x - y) * (x - y);
  }
  mse /= static_cast<double>(av.size());
  if (mse < 1e-12) return kPsnrCap;
  return 10.0 * std::log10(1.0 / mse);
}

namespace detail {

inline std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> w(static_cast<size_t>(size) * static_cast<size_t>(size));
  const int half = size / 2;
  double sum = 0.0;
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double dx = x - half, dy = y - half;
      const double v = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      w[static_cast<size_t>(y * size + x)] = v;
      sum += v;
    }
  }
  for (auto& v : w) v /= sum;
  return w;
}

inline std::vector<double> to_gray(const Tensor& img) {
  const int64_t c = img.shape()[0], hw = img.shape()[1] * img.shape()[2];
  std::vector<double> g(static_cast<size_t>(hw), 0.0);
  const auto& v = img.values();
  for (int64_t ch = 0; ch < c; ++ch)
    for (int64_t i = 0; i < hw; ++i) g[static_cast<size_t>(i)] += v[static_cast<size_t>(ch * hw + i)];
  for (auto& e : g) e = std::min(std::max(e / static_cast<double>(c), 0.0), 1.0);
  return g;
}

}  // namespace detail

// Mean local SSIM, 11x11 Gaussian window (sigma 1.5), K1=0.01, K2=0.03, L=1,
// computed on the channel-mean grayscale over fully covered window positions.
inline double ssim(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "ssim");
  if (a.shape().size() != 3)
    throw ShapeError("ssim: expected [C,H,W] images, got " + shape_str(a.shape()));
  constexpr int kWin = 11;
  constexpr double kC1 = 0.01 * 0.01;  // (K1*L)^2
  constexpr double kC2 = 0.03 * 0.03;  // (K2*L)^2
  const int64_t h = a.shape()[1], w = a.shape()[2];
  if (h < kWin || w < kWin)
    throw ShapeError("ssim: image " + shape_str(a.shape()) + " smaller than 11x11 window");
  static const std::vector<double> window = detail::gaussian_window(kWin, 1.5);
  const std::vector<double> ga = detail::to_gray(a);
  const std::vector<double> gb = detail::to_gray(b);

  double total = 0.0;
  int64_t count = 0;
  for (int64_t oy = 0; oy + kWin <= h; ++oy) {
    for (int64_t ox = 0; ox + kWin <= w; ++ox) {
      double mu_a = 0.0, mu_b = 0.0, aa = 0.0, bb = 0.0, ab = 0.0;
      for (int wy = 0; wy < kWin; ++wy) {
        for (int wx = 0; wx < kWin; ++wx) {
          const double wt = window[static_cast<size_t>(wy * kWin + wx)];
          const double va = ga[static_cast<size_t>((oy + wy) * w + ox + wx)];
          const double vb = gb[static_cast<size_t>((oy + wy) * w + ox + wx)];
          mu_a += wt * va;
          mu_b += wt * vb;
          aa += wt * va * va;
          bb += wt * vb * vb;
          ab += wt * va * vb;
        }
      }
      const double var_a = aa - mu_a * mu_a;
      const double var_b = bb - mu_b * mu_b;
      const double cov = ab - mu_a * mu_b;
      const double num = (2.0 * mu_a * mu_b + kC1) * (2.0 * cov + kC2);
      const double den = (mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2);
      total += num / den;
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

struct KindMetrics {
  double psnr = 0.0;
  double ssim = 0.0;
  int64_t samples = 0;
};

// One evaluation pass: per-kind mean PSNR/SSIM under a stage label such as
// "before", "epoch-1" or "after".
struct MetricReport {
  std::string stage;
  std::map<std::string, KindMetrics> per_kind;
};

inline MetricReport evaluate(
    const RestorationModel& model,
    const std::map<DegradationKind, std::vector<const DegradedPair*>>& heldout,
    const std::string& stage) {
  MetricReport report;
  report.stage = stage;
  for (const auto& [kind, pairs] : heldout) {
    if (pairs.empty()) throw Error("evaluate: empty held-out set for kind " + std::string(kind_name(kind)));
    KindMetrics m;
    for (const DegradedPair* pair : pairs) {
      Graph g(false);
      Tensor out = g.clamp(restore(model, g, pair->degraded), 0.0, 1.0);
      m.psnr += psnr(out, pair->clean);
      m.ssim += ssim(out, pair->clean);
      ++m.samples;
    }
    m.psnr /= static_cast<double>(m.samples);
    m.ssim /= static_cast<double>(m.samples);
    report.per_kind[kind_name(kind)] = m;
  }
  return report;
}

inline std::string format_report_line(const MetricReport& report) {
  std::string line;
  for (const auto& [kind, m] : report.per_kind) {
    if (!line.empty()) line += "  ";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s %.2f/%.4f", kind.c_str(), m.psnr, m.ssim);
    line += buf;
  }
  return line;
}

// Metrics of the degraded inputs themselves (the do-nothing baseline).
inline MetricReport degraded_baseline(
    const std::map<DegradationKind, std::vector<const DegradedPair*>>& heldout,
    const std::string& stage = "degraded-input") {
  MetricReport report;
  report.stage = stage;
  for (const auto& [kind, pairs] : heldout) {
    KindMetrics m;
    for (const DegradedPair* pair : pairs) {
      m.psnr += psnr(pair->degraded, pair->clean);
      m.ssim += ssim(pair->degraded, pair->clean);
      ++m.samples;
    }
    m.psnr /= static_cast<double>(m.samples);
    m.ssim /= static_cast<double>(m.samples);
    report.per_kind[kind_name(kind)] = m;
  }
  return report;
}

}  // namespace uir
