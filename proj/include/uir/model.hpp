#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "uir/degrade.hpp"
#include "uir/graph.hpp"
#include "uir/rng.hpp"
#include "uir/tensor.hpp"

namespace uir {

// Compact fully convolutional restoration network. The body predicts a
// residual that is added to the input, so a model whose final stage is
// zero-initialized is exactly the identity map.
//
// Stages: 3->W conv + relu, (depth-2) W->W convs + relu, W->3 conv
// (zero-initialized). All convs are 3x3, stride 1, padding 1.
class RestorationModel {
public:
  struct Param {
    std::string name;
    Tensor tensor;
  };

  RestorationModel() = default;

  RestorationModel(int64_t width, int64_t depth, uint64_t seed)
      : width_(width), depth_(depth), seed_(seed) {
    if (width < 8) throw ConfigError("model.width must be >= 8, got " + std::to_string(width));
    if (depth < 2) throw ConfigError("model.depth must be >= 2, got " + std::to_string(depth));
    Rng rng(seed);
    for (int64_t layer = 0; layer < depth; ++layer) {
      const int64_t cin = layer == 0 ? 3 : width;
      const int64_t cout = layer == depth - 1 ? 3 : width;
      Tensor kernel(Shape{cout, cin, 3, 3}, 0.0, true);
      Tensor bias(Shape{cout}, 0.0, true);
      if (layer != depth - 1) {
        // He-style scaling for relu stages
        const double stddev = std::sqrt(2.0 / static_cast<double>(cin * 9));
        for (auto& v : kernel.values()) v = rng.normal(0.0, stddev);
      }
      params_.push_back({"conv" + std::to_string(layer) + ".kernel", std::move(kernel)});
      params_.push_back({"conv" + std::to_string(layer) + ".bias", std::move(bias)});
    }
  }

  int64_t width() const { return width_; }
  int64_t depth() const { return depth_; }
  uint64_t seed() const { return seed_; }

  std::vector<Param>& params() { return params_; }
  const std::vector<Param>& params() const { return params_; }

  int64_t param_count() const {
    int64_t n = 0;
    for (const auto& p : params_) n += p.tensor.numel();
    return n;
  }

  void zero_grad() {
    for (auto& p : params_) p.tensor.zero_grad();
  }

  // Deep copy: same architecture, independent parameter storage.
  RestorationModel clone() const {
    RestorationModel m;
    m.width_ = width_;
    m.depth_ = depth_;
    m.seed_ = seed_;
    for (const auto& p : params_) {
      Tensor t = p.tensor.clone();
      t.zero_grad();
      m.params_.push_back({p.name, std::move(t)});
    }
    return m;
  }

  // Residual forward pass; recorded on `g` whenever it is recording.
  // Inputs are images, so values outside [0,1] are rejected.
  Tensor forward(Graph& g, const Tensor& image) const {
    if (image.shape().size() != 3 || image.shape()[0] != 3)
      throw ShapeError("model: expected [3,H,W] input, got " + shape_str(image.shape()));
    if (image.shape()[1] < 16 || image.shape()[2] < 16)
      throw ShapeError("model: input side must be >= 16, got " + shape_str(image.shape()));
    check_image(image, "model");
    Tensor h = image;
    for (int64_t layer = 0; layer < depth_; ++layer) {
      h = g.bias_add(g.conv2d(h, kernel(layer), 1, 1), bias(layer));
      if (layer != depth_ - 1) h = g.relu(h);
    }
    return g.add(image, h);
  }

  const Tensor& kernel(int64_t layer) const { return params_[static_cast<size_t>(2 * layer)].tensor; }
  const Tensor& bias(int64_t layer) const { return params_[static_cast<size_t>(2 * layer + 1)].tensor; }

private:
  int64_t width_ = 0;
  int64_t depth_ = 0;
  uint64_t seed_ = 0;
  std::vector<Param> params_;
};

// Restores one degraded image; contract entry point used by training,
// unlearning and evaluation alike.
inline Tensor restore(const RestorationModel& model, Graph& g, const Tensor& degraded) {
  return model.forward(g, degraded);
}

}  // namespace uir
