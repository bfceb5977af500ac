#include "lstma/math.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace lstma {

void Vec::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Mat::Mat(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
  if (data_.size() != rows * cols) {
    throw std::invalid_argument("Mat: " + std::to_string(data_.size()) + " values for a " +
                                std::to_string(rows) + "x" + std::to_string(cols) + " matrix");
  }
}

Mat Mat::identity(std::size_t n) {
  Mat m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void Mat::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

void require_finite(std::span<const double> values, std::string_view what) {
  if (!all_finite(values)) {
    throw std::domain_error(std::string(what) + ": non-finite value");
  }
}

Vec sigmoid(const Vec& x) {
  require_finite(x.values(), "sigmoid");
  Vec out(x.dim());
  for (std::size_t i = 0; i < x.dim(); ++i) {
    // Split on sign so exp never overflows.
    const double v = x[i];
    if (v >= 0.0) {
      out[i] = 1.0 / (1.0 + std::exp(-v));
    } else {
      const double e = std::exp(v);
      out[i] = e / (1.0 + e);
    }
  }
  return out;
}

Vec tanh(const Vec& x) {
  require_finite(x.values(), "tanh");
  Vec out(x.dim());
  for (std::size_t i = 0; i < x.dim(); ++i) out[i] = std::tanh(x[i]);
  return out;
}

Vec softmax(const Vec& logits) {
  if (logits.empty()) throw std::invalid_argument("softmax: empty input");
  require_finite(logits.values(), "softmax");
  const auto v = logits.values();
  const double peak = *std::max_element(v.begin(), v.end());
  Vec out(logits.dim());
  double total = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - peak);
    total += out[i];
  }
  for (std::size_t i = 0; i < v.size(); ++i) out[i] /= total;
  return out;
}

namespace {

void check_dims(bool ok, const char* operand, std::size_t got, std::size_t want) {
  if (!ok) {
    throw std::invalid_argument(std::string("affine: operand ") + operand + " has dimension " +
                                std::to_string(got) + ", expected " + std::to_string(want));
  }
}

}  // namespace

Vec affine(const Mat& T, const Vec& x, const Mat& R, const Vec& h, const Vec& b) {
  check_dims(T.cols() == x.dim(), "x", x.dim(), T.cols());
  check_dims(R.cols() == h.dim(), "h", h.dim(), R.cols());
  check_dims(R.rows() == T.rows(), "R", R.rows(), T.rows());
  check_dims(b.dim() == T.rows(), "b", b.dim(), T.rows());
  Vec out(b.raw());
  for (std::size_t r = 0; r < T.rows(); ++r) {
    out[r] += dot(T.row(r), x.values()) + dot(R.row(r), h.values());
  }
  return out;
}

Vec matvec(const Mat& a, const Vec& x) {
  if (a.cols() != x.dim()) {
    throw std::invalid_argument("matvec: matrix has " + std::to_string(a.cols()) +
                                " columns, vector has dimension " + std::to_string(x.dim()));
  }
  Vec out(a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r) out[r] = dot(a.row(r), x.values());
  return out;
}

void matvec_transpose_acc(const Mat& a, std::span<const double> x, std::span<double> y) {
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const double s = x[r];
    if (s == 0.0) continue;
    const auto row = a.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) y[c] += s * row[c];
  }
}

void outer_acc(Mat& a, std::span<const double> u, std::span<const double> v) {
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const double s = u[r];
    if (s == 0.0) continue;
    auto row = a.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += s * v[c];
  }
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace lstma
