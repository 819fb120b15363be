#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace vseg {

// Dense 4-D array layout: (batch n, channel c, row h, col w), row-major.
struct Shape {
  int64_t n = 0;
  int64_t c = 0;
  int64_t h = 0;
  int64_t w = 0;

  int64_t numel() const { return n * c * h * w; }
  bool operator==(const Shape&) const = default;

  std::string str() const {
    return "(" + std::to_string(n) + "," + std::to_string(c) + "," +
           std::to_string(h) + "," + std::to_string(w) + ")";
  }
};

// Double-precision tensor with shared storage. By convention the buffer is
// not mutated once an operator has produced it; copies alias the storage.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape s)
      : shape_(s),
        data_(std::make_shared<std::vector<double>>(
            static_cast<size_t>(check_shape(s)), 0.0)) {}

  static Tensor zeros(Shape s) { return Tensor(s); }

  static Tensor full(Shape s, double v) {
    Tensor t(s);
    for (double& x : *t.data_) x = v;
    return t;
  }

  static Tensor from(Shape s, std::vector<double> values) {
    if (static_cast<int64_t>(values.size()) != s.numel())
      throw std::invalid_argument("Tensor::from: " + std::to_string(values.size()) +
                                  " values for shape " + s.str());
    Tensor t;
    t.shape_ = s;
    t.data_ = std::make_shared<std::vector<double>>(std::move(values));
    return t;
  }

  bool defined() const { return static_cast<bool>(data_); }
  const Shape& shape() const { return shape_; }
  int64_t numel() const { return shape_.numel(); }

  double* data() { return data_ ? data_->data() : nullptr; }
  const double* data() const { return data_ ? data_->data() : nullptr; }

  int64_t index(int64_t n, int64_t c, int64_t y, int64_t x) const {
    return ((n * shape_.c + c) * shape_.h + y) * shape_.w + x;
  }

  double& at(int64_t n, int64_t c, int64_t y, int64_t x) {
    return (*data_)[static_cast<size_t>(index(n, c, y, x))];
  }
  double at(int64_t n, int64_t c, int64_t y, int64_t x) const {
    return (*data_)[static_cast<size_t>(index(n, c, y, x))];
  }

  Tensor clone() const {
    if (!defined()) return Tensor();
    Tensor t;
    t.shape_ = shape_;
    t.data_ = std::make_shared<std::vector<double>>(*data_);
    return t;
  }

  bool all_finite() const {
    if (!defined()) return true;
    for (double v : *data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  bool same_values(const Tensor& other) const {
    if (!(shape_ == other.shape_)) return false;
    const double* a = data();
    const double* b = other.data();
    for (int64_t i = 0; i < numel(); ++i)
      if (a[i] != b[i]) return false;
    return true;
  }

 private:
  static int64_t check_shape(const Shape& s) {
    if (s.n < 0 || s.c < 0 || s.h < 0 || s.w < 0)
      throw std::invalid_argument("Tensor: negative dim in shape " + s.str());
    return s.numel();
  }

  Shape shape_{};
  std::shared_ptr<std::vector<double>> data_;
};

// Per-pixel class ids for one frame.
struct LabelMap {
  int64_t h = 0;
  int64_t w = 0;
  std::vector<int32_t> ids;

  LabelMap() = default;
  LabelMap(int64_t h_, int64_t w_) : h(h_), w(w_), ids(static_cast<size_t>(h_ * w_), 0) {}

  int32_t& at(int64_t y, int64_t x) { return ids[static_cast<size_t>(y * w + x)]; }
  int32_t at(int64_t y, int64_t x) const { return ids[static_cast<size_t>(y * w + x)]; }

  bool operator==(const LabelMap&) const = default;
};

}  // namespace vseg
