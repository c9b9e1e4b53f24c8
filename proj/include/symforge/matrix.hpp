// Licensed under the Apache License, Version 2.0 (the "License"); you
// may not use this file except in compliance with the License.  You
// may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
// implied.  See the License for the specific language governing
// permissions and limitations under the License.

#pragma once

#include <cstdint>
#include <vector>

#include "symforge/error.hpp"

namespace symforge {

// Dense row-major float64 matrix. All training math runs in double; the
// entropy terms take logs of eigenvalues and lose too much in float32.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int64_t rows, int64_t cols)
      : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows * cols), 0.0) {
    require(rows >= 0 && cols >= 0, ErrorKind::Shape, "negative matrix dims");
  }

  static Matrix identity(int64_t n) {
    Matrix m(n, n);
    for (int64_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  int64_t rows() const { return rows_; }
  int64_t cols() const { return cols_; }
  int64_t size() const { return rows_ * cols_; }
  bool square() const { return rows_ == cols_; }

  double& operator()(int64_t r, int64_t c) { return data_[r * cols_ + c]; }
  double operator()(int64_t r, int64_t c) const { return data_[r * cols_ + c]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double* row(int64_t r) { return data_.data() + r * cols_; }
  const double* row(int64_t r) const { return data_.data() + r * cols_; }

  bool same_shape(const Matrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }
  void zero() { fill(0.0); }

 private:
  int64_t rows_ = 0;
  int64_t cols_ = 0;
  std::vector<double> data_;
};

using Vector = std::vector<double>;

// Value plus same-shape gradient accumulator; the adjoint is zeroed before
// every backward pass and read once after it.
template <typename T>
struct DualSlot {
  T value;
  T adjoint;
};

inline DualSlot<Matrix> make_dual(const Matrix& m) {
  return DualSlot<Matrix>{m, Matrix(m.rows(), m.cols())};
}
inline DualSlot<Vector> make_dual(const Vector& v) {
  return DualSlot<Vector>{v, Vector(v.size(), 0.0)};
}

// --- products (Eigen-backed, deterministically block-parallel) -------------

// C = A*B, C = A^T*B, C = A*B^T. With accumulate, adds into C instead.
void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate = false);
void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate = false);
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate = false);

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix matmul_nt(const Matrix& a, const Matrix& b);

Vector matvec(const Matrix& a, const Vector& x);    // A x
Vector matvec_t(const Matrix& a, const Vector& x);  // A^T x

// M += x y^T
void add_outer(Matrix& m, const Vector& x, const Vector& y);

// --- elementwise / reductions ----------------------------------------------

Matrix transpose(const Matrix& a);
void scale(Matrix& a, double s);
void scale(Vector& a, double s);
void axpy(double alpha, const Matrix& x, Matrix& y);  // y += alpha*x
void axpy(double alpha, const Vector& x, Vector& y);

double frobenius_dot(const Matrix& a, const Matrix& b);
double frobenius_norm(const Matrix& a);
double one_norm(const Matrix& a);  // max column abs sum
double max_abs(const Matrix& a);
double norm2(const Vector& v);
double dot(const Vector& a, const Vector& b);

bool all_finite(const Matrix& a);
bool all_finite(const Vector& v);

}  // namespace symforge
