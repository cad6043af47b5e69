#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "uir/tensor.hpp"

namespace uir {

struct OptimizerConfig {
  double lr = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const {
    if (!(lr > 0.0)) throw ConfigError("optimizer lr must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("optimizer beta1 must lie in [0,1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("optimizer beta2 must lie in [0,1)");
    if (!(eps > 0.0)) throw ConfigError("optimizer eps must be positive");
  }
};

// Adam with bias correction. Holds first/second moment buffers per parameter;
// step() consumes the gradients and zeroes them.
class Adam {
public:
  Adam(OptimizerConfig cfg, std::vector<Tensor> params) : cfg_(cfg), params_(std::move(params)) {
    cfg_.validate();
    for (const auto& p : params_) {
      if (!p.requires_grad())
        throw Error("adam: parameter without gradient (requires_grad is false)");
      m_.emplace_back(p.numel(), 0.0);
      v_.emplace_back(p.numel(), 0.0);
    }
  }

  int64_t step_count() const { return step_; }
  const OptimizerConfig& config() const { return cfg_; }

  void step() {
    ++step_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    for (size_t pi = 0; pi < params_.size(); ++pi) {
      auto& value = params_[pi].values();
      auto& grad = params_[pi].grad();
      auto& m = m_[pi];
      auto& v = v_[pi];
      for (size_t i = 0; i < value.size(); ++i) {
        const double g = grad[i];
        if (!std::isfinite(g))
          throw NonFiniteError("adam: non-finite gradient at step " + std::to_string(step_));
        m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
        v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
        const double m_hat = m[i] / bc1;
        const double v_hat = v[i] / bc2;
        value[i] -= cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
        grad[i] = 0.0;
      }
    }
  }

  // moment buffers exposed for checkpointing
  const std::vector<std::vector<double>>& first_moments() const { return m_; }
  const std::vector<std::vector<double>>& second_moments() const { return v_; }
  void restore_state(std::vector<std::vector<double>> m, std::vector<std::vector<double>> v,
                     int64_t step) {
    if (m.size() != params_.size() || v.size() != params_.size())
      throw Error("adam: moment count does not match parameter count");
    for (size_t i = 0; i < params_.size(); ++i) {
      if (m[i].size() != params_[i].values().size() || v[i].size() != params_[i].values().size())
        throw Error("adam: moment shape does not match parameter shape");
    }
    m_ = std::move(m);
    v_ = std::move(v);
    step_ = step;
  }

private:
  OptimizerConfig cfg_;
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> m_, v_;
  int64_t step_ = 0;
};

}  // namespace uir
