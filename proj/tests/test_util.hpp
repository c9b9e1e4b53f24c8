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

#include <cmath>

#include "symforge/matrix.hpp"
#include "symforge/rng.hpp"

namespace symforge::test {

inline Matrix random_matrix(Rng& rng, int64_t rows, int64_t cols, double sd = 1.0) {
  Matrix m(rows, cols);
  for (int64_t i = 0; i < m.size(); ++i) m.data()[i] = rng.normal(0.0, sd);
  return m;
}

inline Matrix random_antisymmetric(Rng& rng, int64_t n, double sd = 1.0) {
  Matrix a = random_matrix(rng, n, n, sd);
  Matrix s(n, n);
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = 0; j < n; ++j) s(i, j) = 0.5 * (a(i, j) - a(j, i));
  return s;
}

inline Matrix random_spd(Rng& rng, int64_t n) {
  Matrix b = random_matrix(rng, n, n);
  Matrix c = matmul_tn(b, b);
  for (int64_t i = 0; i < n; ++i) c(i, i) += 0.5;
  return c;
}

inline Vector random_vector(Rng& rng, int64_t n, double sd = 1.0) {
  Vector v(n);
  for (auto& x : v) x = rng.normal(0.0, sd);
  return v;
}

inline double rel_error(double got, double want, double floor = 1e-8) {
  return std::fabs(got - want) / std::max(std::fabs(want), floor);
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  double best = 0.0;
  for (int64_t i = 0; i < a.size(); ++i)
    best = std::max(best, std::fabs(a.data()[i] - b.data()[i]));
  return best;
}

inline double orthogonality_defect(const Matrix& g) {
  Matrix gtg = matmul_tn(g, g);
  for (int64_t i = 0; i < gtg.rows(); ++i) gtg(i, i) -= 1.0;
  return frobenius_norm(gtg);
}

// Determinant via Gaussian elimination with partial pivoting (test oracle).
inline double determinant(Matrix a) {
  const int64_t n = a.rows();
  double det = 1.0;
  for (int64_t col = 0; col < n; ++col) {
    int64_t piv = col;
    for (int64_t r = col + 1; r < n; ++r)
      if (std::fabs(a(r, col)) > std::fabs(a(piv, col))) piv = r;
    if (a(piv, col) == 0.0) return 0.0;
    if (piv != col) {
      for (int64_t c = 0; c < n; ++c) std::swap(a(piv, c), a(col, c));
      det = -det;
    }
    det *= a(col, col);
    for (int64_t r = col + 1; r < n; ++r) {
      double f = a(r, col) / a(col, col);
      for (int64_t c = col; c < n; ++c) a(r, c) -= f * a(col, c);
    }
  }
  return det;
}

}  // namespace symforge::test
