#pragma once

#include <cassert>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pcnn/error.hpp"
#include "pcnn/rng.hpp"

namespace pcnn {

/// List of positive dimensions, e.g. [H, W, C] for an image. A
/// default-constructed Shape is an empty placeholder with zero elements.
class Shape {
public:
  Shape() = default;

  Shape(std::initializer_list<int64_t> dims)
      : Shape(std::vector<int64_t>(dims)) {}

  explicit Shape(std::vector<int64_t> dims) : dims_(std::move(dims)) {
    if (dims_.empty()) throw ShapeError("shape must have at least one dim");
    count_ = 1;
    for (int64_t d : dims_) {
      if (d < 1) throw ShapeError("shape dim must be >= 1, got " + std::to_string(d));
      if (count_ > std::numeric_limits<int64_t>::max() / d)
        throw ShapeError("shape element count overflows");
      count_ *= d;
    }
  }

  int rank() const { return static_cast<int>(dims_.size()); }
  int64_t dim(int i) const { return dims_[static_cast<size_t>(i)]; }
  const std::vector<int64_t>& dims() const { return dims_; }
  int64_t element_count() const { return count_; }

  bool operator==(const Shape& o) const { return dims_ == o.dims_; }
  bool operator!=(const Shape& o) const { return !(*this == o); }

  std::string str() const {
    std::ostringstream os;
    os << '[';
    for (size_t i = 0; i < dims_.size(); ++i) {
      if (i) os << ',';
      os << dims_[i];
    }
    os << ']';
    return os.str();
  }

private:
  std::vector<int64_t> dims_;
  int64_t count_ = 0;
};

/// Dense row-major array of doubles (last dim fastest). Library operations
/// treat tensors as values and return new ones; in-place element access is
/// reserved for construction and optimizer updates.
class Tensor {
public:
  Tensor() = default;

  explicit Tensor(const Shape& shape)
      : shape_(shape), data_(static_cast<size_t>(shape.element_count())) {}

  static Tensor filled(const Shape& shape, double value) {
    Tensor t(shape);
    for (double& v : t.data_) v = value;
    return t;
  }

  static Tensor zeros(const Shape& shape) { return Tensor(shape); }

  /// Elements i.i.d. uniform in [lo, hi); identical seed gives identical bits.
  static Tensor random_uniform(const Shape& shape, double lo, double hi, Rng& rng) {
    if (!(lo < hi))
      throw ArgumentError("random_uniform needs lo < hi");
    Tensor t(shape);
    for (double& v : t.data_) v = rng.next_uniform(lo, hi);
    return t;
  }

  const Shape& shape() const { return shape_; }
  int64_t size() const { return static_cast<int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& operator[](int64_t i) {
    assert(i >= 0 && i < size());
    return data_[static_cast<size_t>(i)];
  }
  double operator[](int64_t i) const {
    assert(i >= 0 && i < size());
    return data_[static_cast<size_t>(i)];
  }

  // Row-major accessors: for shape [A,B,C], (i,j,k) maps to (i*B + j)*C + k.
  double& at(int64_t i, int64_t j) { return (*this)[flat2(i, j)]; }
  double at(int64_t i, int64_t j) const { return (*this)[flat2(i, j)]; }
  double& at(int64_t i, int64_t j, int64_t k) { return (*this)[flat3(i, j, k)]; }
  double at(int64_t i, int64_t j, int64_t k) const { return (*this)[flat3(i, j, k)]; }
  double& at(int64_t i, int64_t j, int64_t k, int64_t l) { return (*this)[flat4(i, j, k, l)]; }
  double at(int64_t i, int64_t j, int64_t k, int64_t l) const { return (*this)[flat4(i, j, k, l)]; }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

private:
  int64_t flat2(int64_t i, int64_t j) const {
    assert(shape_.rank() == 2);
    return i * shape_.dim(1) + j;
  }
  int64_t flat3(int64_t i, int64_t j, int64_t k) const {
    assert(shape_.rank() == 3);
    return (i * shape_.dim(1) + j) * shape_.dim(2) + k;
  }
  int64_t flat4(int64_t i, int64_t j, int64_t k, int64_t l) const {
    assert(shape_.rank() == 4);
    return ((i * shape_.dim(1) + j) * shape_.dim(2) + k) * shape_.dim(3) + l;
  }

  Shape shape_;
  std::vector<double> data_;
};

/// Same data order under a new shape with equal element count.
inline Tensor reshape(const Tensor& t, const Shape& new_shape) {
  if (new_shape.element_count() != t.size())
    throw ShapeError("reshape " + t.shape().str() + " -> " + new_shape.str() +
                     ": element count mismatch");
  Tensor out(new_shape);
  const double* src = t.data();
  double* dst = out.data();
  for (int64_t i = 0; i < t.size(); ++i) dst[i] = src[i];
  return out;
}

/// c[i,j] = sum_k a[i,k] * b[k,j]. Both operands must be rank 2.
inline Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.shape().rank() != 2 || b.shape().rank() != 2)
    throw ShapeError("matmul needs rank-2 tensors, got " + a.shape().str() +
                     " and " + b.shape().str());
  const int64_t m = a.shape().dim(0), k = a.shape().dim(1);
  const int64_t k2 = b.shape().dim(0), n = b.shape().dim(1);
  if (k != k2)
    throw ShapeError("matmul inner dims differ: " + a.shape().str() + " x " +
                     b.shape().str());
  Tensor c = Tensor::zeros({m, n});
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();
  // i-k-j order keeps the inner loop contiguous over b and c rows.
  for (int64_t i = 0; i < m; ++i) {
    const double* arow = pa + i * k;
    double* crow = pc + i * n;
    for (int64_t kk = 0; kk < k; ++kk) {
      const double av = arow[kk];
      const double* brow = pb + kk * n;
      for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

inline Tensor transpose(const Tensor& a) {
  if (a.shape().rank() != 2)
    throw ShapeError("transpose needs a rank-2 tensor, got " + a.shape().str());
  const int64_t m = a.shape().dim(0), n = a.shape().dim(1);
  Tensor t({n, m});
  for (int64_t i = 0; i < m; ++i)
    for (int64_t j = 0; j < n; ++j) t.at(j, i) = a.at(i, j);
  return t;
}

template <typename F>
Tensor map(const Tensor& t, F f) {
  Tensor out(t.shape());
  const double* src = t.data();
  double* dst = out.data();
  for (int64_t i = 0; i < t.size(); ++i) dst[i] = f(src[i]);
  return out;
}

inline void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape().str() +
                     " vs " + b.shape().str());
}

inline Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  Tensor out(a.shape());
  for (int64_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  Tensor out(a.shape());
  for (int64_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

inline Tensor scale(const Tensor& t, double s) {
  return map(t, [s](double v) { return v * s; });
}

}  // namespace pcnn
