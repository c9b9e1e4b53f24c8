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

#include "symforge/matrix.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "symforge/threading.hpp"

namespace symforge {

namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CMap = Eigen::Map<const EMat>;
using MMap = Eigen::Map<EMat>;

constexpr int64_t kRowGrain = 64;
constexpr int64_t kParallelFlops = 1 << 22;

// Splits output rows into fixed blocks; every block is produced by exactly
// one thread, so results do not depend on the worker count.
template <typename Fn>
void for_output_rows(int64_t out_rows, int64_t flops, const Fn& fn) {
  if (flops < kParallelFlops || out_rows < 2 * kRowGrain) {
    fn(0, out_rows);
    return;
  }
  parallel_for(out_rows, kRowGrain, fn);
}

}  // namespace

void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  require(a.cols() == b.rows(), ErrorKind::Shape, "gemm_nn: inner dims differ");
  require(c.rows() == a.rows() && c.cols() == b.cols(), ErrorKind::Shape,
          "gemm_nn: bad output shape");
  CMap am(a.data(), a.rows(), a.cols());
  CMap bm(b.data(), b.rows(), b.cols());
  MMap cm(c.data(), c.rows(), c.cols());
  for_output_rows(c.rows(), a.rows() * a.cols() * b.cols(),
                  [&](int64_t r0, int64_t r1) {
                    auto block = cm.middleRows(r0, r1 - r0);
                    if (accumulate)
                      block.noalias() += am.middleRows(r0, r1 - r0) * bm;
                    else
                      block.noalias() = am.middleRows(r0, r1 - r0) * bm;
                  });
}

void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  require(a.rows() == b.rows(), ErrorKind::Shape, "gemm_tn: inner dims differ");
  require(c.rows() == a.cols() && c.cols() == b.cols(), ErrorKind::Shape,
          "gemm_tn: bad output shape");
  CMap am(a.data(), a.rows(), a.cols());
  CMap bm(b.data(), b.rows(), b.cols());
  MMap cm(c.data(), c.rows(), c.cols());
  for_output_rows(c.rows(), a.rows() * a.cols() * b.cols(),
                  [&](int64_t r0, int64_t r1) {
                    auto block = cm.middleRows(r0, r1 - r0);
                    auto at = am.middleCols(r0, r1 - r0).transpose();
                    if (accumulate)
                      block.noalias() += at * bm;
                    else
                      block.noalias() = at * bm;
                  });
}

void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  require(a.cols() == b.cols(), ErrorKind::Shape, "gemm_nt: inner dims differ");
  require(c.rows() == a.rows() && c.cols() == b.rows(), ErrorKind::Shape,
          "gemm_nt: bad output shape");
  CMap am(a.data(), a.rows(), a.cols());
  CMap bm(b.data(), b.rows(), b.cols());
  MMap cm(c.data(), c.rows(), c.cols());
  for_output_rows(c.rows(), a.rows() * a.cols() * b.rows(),
                  [&](int64_t r0, int64_t r1) {
                    auto block = cm.middleRows(r0, r1 - r0);
                    auto ab = am.middleRows(r0, r1 - r0) * bm.transpose();
                    if (accumulate)
                      block.noalias() += ab;
                    else
                      block.noalias() = ab;
                  });
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  gemm_nn(a, b, c);
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  Matrix c(a.cols(), b.cols());
  gemm_tn(a, b, c);
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.rows());
  gemm_nt(a, b, c);
  return c;
}

Vector matvec(const Matrix& a, const Vector& x) {
  require(a.cols() == static_cast<int64_t>(x.size()), ErrorKind::Shape,
          "matvec: dimension mismatch");
  Vector y(a.rows(), 0.0);
  CMap am(a.data(), a.rows(), a.cols());
  Eigen::Map<Eigen::VectorXd>(y.data(), y.size()).noalias() =
      am * Eigen::Map<const Eigen::VectorXd>(x.data(), x.size());
  return y;
}

Vector matvec_t(const Matrix& a, const Vector& x) {
  require(a.rows() == static_cast<int64_t>(x.size()), ErrorKind::Shape,
          "matvec_t: dimension mismatch");
  Vector y(a.cols(), 0.0);
  CMap am(a.data(), a.rows(), a.cols());
  Eigen::Map<Eigen::VectorXd>(y.data(), y.size()).noalias() =
      am.transpose() * Eigen::Map<const Eigen::VectorXd>(x.data(), x.size());
  return y;
}

void add_outer(Matrix& m, const Vector& x, const Vector& y) {
  require(m.rows() == static_cast<int64_t>(x.size()) &&
              m.cols() == static_cast<int64_t>(y.size()),
          ErrorKind::Shape, "add_outer: shape mismatch");
  for (int64_t i = 0; i < m.rows(); ++i) {
    double xi = x[i];
    double* mr = m.row(i);
    for (int64_t j = 0; j < m.cols(); ++j) mr[j] += xi * y[j];
  }
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (int64_t i = 0; i < a.rows(); ++i)
    for (int64_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

void scale(Matrix& a, double s) {
  for (int64_t i = 0; i < a.size(); ++i) a.data()[i] *= s;
}

void scale(Vector& a, double s) {
  for (auto& v : a) v *= s;
}

void axpy(double alpha, const Matrix& x, Matrix& y) {
  require(x.same_shape(y), ErrorKind::Shape, "axpy: shape mismatch");
  for (int64_t i = 0; i < x.size(); ++i) y.data()[i] += alpha * x.data()[i];
}

void axpy(double alpha, const Vector& x, Vector& y) {
  require(x.size() == y.size(), ErrorKind::Shape, "axpy: size mismatch");
  for (size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

double frobenius_dot(const Matrix& a, const Matrix& b) {
  require(a.same_shape(b), ErrorKind::Shape, "frobenius_dot: shape mismatch");
  double s = 0.0;
  for (int64_t i = 0; i < a.size(); ++i) s += a.data()[i] * b.data()[i];
  return s;
}

double frobenius_norm(const Matrix& a) { return std::sqrt(frobenius_dot(a, a)); }

double one_norm(const Matrix& a) {
  double best = 0.0;
  for (int64_t j = 0; j < a.cols(); ++j) {
    double s = 0.0;
    for (int64_t i = 0; i < a.rows(); ++i) s += std::fabs(a(i, j));
    best = std::max(best, s);
  }
  return best;
}

double max_abs(const Matrix& a) {
  double best = 0.0;
  for (int64_t i = 0; i < a.size(); ++i)
    best = std::max(best, std::fabs(a.data()[i]));
  return best;
}

double norm2(const Vector& v) { return std::sqrt(dot(v, v)); }

double dot(const Vector& a, const Vector& b) {
  require(a.size() == b.size(), ErrorKind::Shape, "dot: size mismatch");
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

bool all_finite(const Matrix& a) {
  for (int64_t i = 0; i < a.size(); ++i)
    if (!std::isfinite(a.data()[i])) return false;
  return true;
}

bool all_finite(const Vector& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace symforge
