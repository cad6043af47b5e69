#pragma once

// Test-only helpers: central finite-difference gradients and a generator of
// random op compositions. Both check the autodiff engine from the outside,
// through forward evaluations only.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "uir/graph.hpp"
#include "uir/rng.hpp"
#include "uir/tensor.hpp"

namespace gradcheck {

using BuildFn = std::function<uir::Tensor(uir::Graph&)>;

inline double eval_scalar(const BuildFn& build) {
  uir::Graph g(false);
  return build(g).item();
}

// d(loss)/d(leaf[i]) by central differences, rebuilding the graph per probe.
inline std::vector<std::vector<double>> finite_diff(const std::vector<uir::Tensor>& leaves,
                                                    const BuildFn& build, double eps = 1e-5) {
  std::vector<std::vector<double>> grads;
  for (const uir::Tensor& leaf : leaves) {
    std::vector<double> g(leaf.values().size());
    uir::Tensor mut = leaf;  // shared storage; perturb in place
    for (size_t i = 0; i < g.size(); ++i) {
      const double saved = mut.values()[i];
      mut.values()[i] = saved + eps;
      const double up = eval_scalar(build);
      mut.values()[i] = saved - eps;
      const double down = eval_scalar(build);
      mut.values()[i] = saved;
      g[i] = (up - down) / (2.0 * eps);
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

struct GradCompare {
  bool ok = true;
  double worst_rel = 0.0;
  std::string detail;
};

inline GradCompare compare_gradients(const std::vector<uir::Tensor>& leaves, const BuildFn& build,
                                     double rel_tol = 1e-4, double abs_floor = 1e-7,
                                     double eps = 1e-5) {
  for (uir::Tensor leaf : leaves) leaf.zero_grad();
  uir::Graph g;
  uir::Tensor loss = build(g);
  g.backward(loss);

  const auto fd = finite_diff(leaves, build, eps);
  GradCompare result;
  for (size_t li = 0; li < leaves.size(); ++li) {
    const auto& ad = leaves[li].grad();
    for (size_t i = 0; i < ad.size(); ++i) {
      const double diff = std::fabs(ad[i] - fd[li][i]);
      if (diff <= abs_floor) continue;
      const double denom = std::max(std::fabs(ad[i]), std::fabs(fd[li][i]));
      const double rel = diff / denom;
      result.worst_rel = std::max(result.worst_rel, rel);
      if (rel > rel_tol && result.ok) {
        result.ok = false;
        result.detail = "leaf " + std::to_string(li) + " elem " + std::to_string(i) + ": ad " +
                        std::to_string(ad[i]) + " vs fd " + std::to_string(fd[li][i]);
      }
    }
  }
  return result;
}

// A replayable random composition of supported ops. The creation log mixes
// leaf pushes and op applications, so replaying it on any graph rebuilds the
// same computation over the same (mutable) leaf tensors.
class RandomProgram {
public:
  explicit RandomProgram(uint64_t seed) {
    uir::Rng rng(seed);
    const int n_leaves = 1 + static_cast<int>(rng.uniform_index(2));
    for (int i = 0; i < n_leaves; ++i) push_leaf(random_shape(rng), rng);
    const int n_ops = 3 + static_cast<int>(rng.uniform_index(6));
    for (int i = 0; i < n_ops; ++i) push_random_op(rng);
  }

  const std::vector<uir::Tensor>& leaves() const { return leaves_; }

  int64_t total_elements() const {
    int64_t n = 0;
    for (const auto& s : pool_shapes_) n += uir::shape_numel(s);
    return n;
  }

  uir::Tensor build(uir::Graph& g) const {
    std::vector<uir::Tensor> pool;
    for (const auto& step : steps_) pool.push_back(step(g, pool));
    // fold everything into one scalar so every node influences the loss
    uir::Tensor total = g.mean(pool[0]);
    for (size_t i = 1; i < pool.size(); ++i) total = g.add(total, g.mean(pool[i]));
    return total;
  }

private:
  using Step = std::function<uir::Tensor(uir::Graph&, const std::vector<uir::Tensor>&)>;

  // every tensor stays at or below 64 elements
  static uir::Shape random_shape(uir::Rng& rng) {
    if (rng.coin()) {
      return {2 + static_cast<int64_t>(rng.uniform_index(10))};
    }
    return {1 + static_cast<int64_t>(rng.uniform_index(2)),
            4 + static_cast<int64_t>(rng.uniform_index(2)),
            4 + static_cast<int64_t>(rng.uniform_index(2))};
  }

  // Returns the pool position of the new leaf.
  size_t push_leaf(const uir::Shape& shape, uir::Rng& rng) {
    uir::Tensor t(shape, 0.0, true);
    for (auto& v : t.values()) v = rng.uniform(-1.5, 1.5);
    leaves_.push_back(t);
    steps_.push_back([t](uir::Graph&, const std::vector<uir::Tensor>&) { return t; });
    pool_shapes_.push_back(shape);
    return pool_shapes_.size() - 1;
  }

  size_t pick_image(uir::Rng& rng) const {
    std::vector<size_t> candidates;
    for (size_t i = 0; i < pool_shapes_.size(); ++i)
      if (pool_shapes_[i].size() == 3) candidates.push_back(i);
    return candidates[rng.uniform_index(candidates.size())];
  }

  bool has_image() const {
    for (const auto& s : pool_shapes_)
      if (s.size() == 3) return true;
    return false;
  }

  void push_random_op(uir::Rng& rng) {
    for (;;) {
      switch (rng.uniform_index(10)) {
        case 0: {  // add/sub/mul over two same-shaped pool entries
          const size_t a = rng.uniform_index(pool_shapes_.size());
          std::vector<size_t> mates;
          for (size_t i = 0; i < pool_shapes_.size(); ++i)
            if (pool_shapes_[i] == pool_shapes_[a]) mates.push_back(i);
          const size_t b = mates[rng.uniform_index(mates.size())];
          const int which = static_cast<int>(rng.uniform_index(3));
          steps_.push_back([a, b, which](uir::Graph& g, const std::vector<uir::Tensor>& p) {
            if (which == 0) return g.add(p[a], p[b]);
            if (which == 1) return g.sub(p[a], p[b]);
            return g.mul(p[a], p[b]);
          });
          pool_shapes_.push_back(pool_shapes_[a]);
          return;
        }
        case 1: {
          const size_t a = rng.uniform_index(pool_shapes_.size());
          steps_.push_back([a](uir::Graph& g, const std::vector<uir::Tensor>& p) { return g.neg(p[a]); });
          pool_shapes_.push_back(pool_shapes_[a]);
          return;
        }
        case 2: {
          const size_t a = rng.uniform_index(pool_shapes_.size());
          steps_.push_back([a](uir::Graph& g, const std::vector<uir::Tensor>& p) { return g.relu(p[a]); });
          pool_shapes_.push_back(pool_shapes_[a]);
          return;
        }
        case 3: {
          const size_t a = rng.uniform_index(pool_shapes_.size());
          steps_.push_back([a](uir::Graph& g, const std::vector<uir::Tensor>& p) { return g.abs(p[a]); });
          pool_shapes_.push_back(pool_shapes_[a]);
          return;
        }
        case 4: {
          const size_t a = rng.uniform_index(pool_shapes_.size());
          const double lo = rng.uniform(-1.2, -0.2);
          const double hi = rng.uniform(0.2, 1.2);
          steps_.push_back([a, lo, hi](uir::Graph& g, const std::vector<uir::Tensor>& p) {
            return g.clamp(p[a], lo, hi);
          });
          pool_shapes_.push_back(pool_shapes_[a]);
          return;
        }
        case 5: {
          const size_t a = rng.uniform_index(pool_shapes_.size());
          const double f = rng.uniform(-2.0, 2.0);
          steps_.push_back([a, f](uir::Graph& g, const std::vector<uir::Tensor>& p) {
            return g.scale(p[a], f);
          });
          pool_shapes_.push_back(pool_shapes_[a]);
          return;
        }
        case 6: {  // l1 or mse between same-shaped pool entries
          const size_t a = rng.uniform_index(pool_shapes_.size());
          std::vector<size_t> mates;
          for (size_t i = 0; i < pool_shapes_.size(); ++i)
            if (pool_shapes_[i] == pool_shapes_[a]) mates.push_back(i);
          const size_t b = mates[rng.uniform_index(mates.size())];
          const bool l1 = rng.coin();
          steps_.push_back([a, b, l1](uir::Graph& g, const std::vector<uir::Tensor>& p) {
            return l1 ? g.l1_loss(p[a], p[b]) : g.mse_loss(p[a], p[b]);
          });
          pool_shapes_.push_back({1});
          return;
        }
        case 7: {  // conv2d with a fresh kernel leaf
          if (!has_image()) break;
          const size_t a = pick_image(rng);
          const uir::Shape in_shape = pool_shapes_[a];
          const int64_t k = rng.coin() ? 1 : 3;
          const int64_t pad = k == 3 ? static_cast<int64_t>(rng.uniform_index(2)) : 0;
          const int64_t cout = pad == 1 ? 1 : 1 + static_cast<int64_t>(rng.uniform_index(2));
          const size_t kidx = push_leaf({cout, in_shape[0], k, k}, rng);
          steps_.push_back([a, kidx, pad](uir::Graph& g, const std::vector<uir::Tensor>& p) {
            return g.conv2d(p[a], p[kidx], 1, pad);
          });
          pool_shapes_.push_back(
              {cout, in_shape[1] + 2 * pad - k + 1, in_shape[2] + 2 * pad - k + 1});
          return;
        }
        case 8: {  // conv_transpose2d with a fresh kernel leaf
          if (!has_image()) break;
          const size_t a = pick_image(rng);
          const uir::Shape in_shape = pool_shapes_[a];
          const int64_t cout = 1;
          const int64_t k = rng.coin() ? 2 : 3;
          const size_t kidx = push_leaf({in_shape[0], cout, k, k}, rng);
          steps_.push_back([a, kidx](uir::Graph& g, const std::vector<uir::Tensor>& p) {
            return g.conv_transpose2d(p[a], p[kidx], 1, 0);
          });
          pool_shapes_.push_back({cout, in_shape[1] + k - 1, in_shape[2] + k - 1});
          return;
        }
        case 9: {
          const size_t a = rng.uniform_index(pool_shapes_.size());
          steps_.push_back([a](uir::Graph& g, const std::vector<uir::Tensor>& p) { return g.mean(p[a]); });
          pool_shapes_.push_back({1});
          return;
        }
      }
    }
  }

  std::vector<uir::Tensor> leaves_;
  std::vector<uir::Shape> pool_shapes_;
  std::vector<Step> steps_;
};

}  // namespace gradcheck
