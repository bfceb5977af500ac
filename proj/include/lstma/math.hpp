#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

namespace lstma {

/// Dense real vector. All arithmetic in the library is double precision.
class Vec {
 public:
  Vec() = default;
  explicit Vec(std::size_t dim, double fill = 0.0) : data_(dim, fill) {}
  Vec(std::initializer_list<double> values) : data_(values) {}
  explicit Vec(std::vector<double> values) : data_(std::move(values)) {}

  std::size_t dim() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  const std::vector<double>& raw() const { return data_; }

  void fill(double v);

  bool operator==(const Vec&) const = default;

 private:
  std::vector<double> data_;
};

/// Dense row-major matrix.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Mat(std::size_t rows, std::size_t cols, std::vector<double> values);

  static Mat identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  void fill(double v);

  bool operator==(const Mat&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Elementwise nonlinearities. Non-finite input throws std::domain_error.
Vec sigmoid(const Vec& x);
Vec tanh(const Vec& x);

/// Max-shifted softmax. Throws on an empty or non-finite input.
Vec softmax(const Vec& logits);

/// T*x + R*h + b. A dimension mismatch throws std::invalid_argument naming the
/// offending operand.
Vec affine(const Mat& T, const Vec& x, const Mat& R, const Vec& h, const Vec& b);

/// A*x
Vec matvec(const Mat& a, const Vec& x);

/// y += A^T * x
void matvec_transpose_acc(const Mat& a, std::span<const double> x, std::span<double> y);

/// A += u * v^T
void outer_acc(Mat& a, std::span<const double> u, std::span<const double> v);

/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

double dot(std::span<const double> a, std::span<const double> b);

bool all_finite(std::span<const double> values);

/// Throws std::domain_error mentioning `what` if any value is NaN or infinite.
void require_finite(std::span<const double> values, std::string_view what);

}  // namespace lstma
