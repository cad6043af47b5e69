#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace uir {

class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ShapeError : public Error {
public:
  explicit ShapeError(const std::string& msg) : Error(msg) {}
};

class NonFiniteError : public Error {
public:
  explicit NonFiniteError(const std::string& msg) : Error(msg) {}
};

class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

class IoError : public Error {
public:
  explicit IoError(const std::string& msg) : Error(msg) {}
};

class DivergenceError : public Error {
public:
  explicit DivergenceError(const std::string& msg) : Error(msg) {}
};

using Shape = std::vector<int64_t>;

inline int64_t shape_numel(const Shape& shape) {
  int64_t n = 1;
  for (int64_t d : shape) n *= d;
  return n;
}

inline std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

struct TensorImpl {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;
  bool requires_grad = false;
};

// Shared handle to an n-d array of doubles plus its gradient buffer.
// Copies alias the same storage; ops that build new results allocate
// fresh impls.
class Tensor {
public:
  Tensor() : impl_(std::make_shared<TensorImpl>()) {}

  explicit Tensor(Shape shape, double fill = 0.0, bool requires_grad = false)
      : impl_(std::make_shared<TensorImpl>()) {
    for (int64_t d : shape) {
      if (d <= 0) throw ShapeError("tensor dimension must be positive, got " + shape_str(shape));
    }
    impl_->shape = std::move(shape);
    const size_t n = static_cast<size_t>(shape_numel(impl_->shape));
    impl_->values.assign(n, fill);
    impl_->grad.assign(n, 0.0);
    impl_->requires_grad = requires_grad;
  }

  static Tensor from_values(Shape shape, std::vector<double> values, bool requires_grad = false) {
    Tensor t(std::move(shape), 0.0, requires_grad);
    if (values.size() != t.values().size()) {
      throw ShapeError("value count " + std::to_string(values.size()) + " does not match shape " +
                       shape_str(t.shape()));
    }
    t.impl_->values = std::move(values);
    return t;
  }

  static Tensor scalar(double v, bool requires_grad = false) {
    return from_values({1}, {v}, requires_grad);
  }

  const Shape& shape() const { return impl_->shape; }
  int64_t numel() const { return static_cast<int64_t>(impl_->values.size()); }
  bool is_scalar() const { return numel() == 1; }

  std::vector<double>& values() { return impl_->values; }
  const std::vector<double>& values() const { return impl_->values; }
  std::vector<double>& grad() { return impl_->grad; }
  const std::vector<double>& grad() const { return impl_->grad; }

  double& at(int64_t i) { return impl_->values[static_cast<size_t>(i)]; }
  double at(int64_t i) const { return impl_->values[static_cast<size_t>(i)]; }

  double item() const {
    if (!is_scalar()) throw ShapeError("item() on non-scalar tensor " + shape_str(shape()));
    return impl_->values[0];
  }

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool on) { impl_->requires_grad = on; }

  void zero_grad() { std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0); }

  void fill(double v) { std::fill(impl_->values.begin(), impl_->values.end(), v); }

  bool all_finite() const {
    for (double v : impl_->values)
      if (!std::isfinite(v)) return false;
    return true;
  }

  // Deep copy; the clone shares nothing with the source.
  Tensor clone() const {
    Tensor t;
    *t.impl_ = *impl_;
    return t;
  }

  bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

private:
  std::shared_ptr<TensorImpl> impl_;
};

inline void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
}

inline void check_finite(const Tensor& t, const char* op) {
  if (!t.all_finite()) throw NonFiniteError(std::string(op) + ": non-finite input value");
}

}  // namespace uir
