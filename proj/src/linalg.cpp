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

#include "symforge/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace symforge {

namespace {

constexpr int kTaylorOrder = 12;
constexpr double kScaleTarget = 0.5;
constexpr int kMaxSweeps = 100;
constexpr double kJacobiTol = 1e-12;

int squarings_for(double norm1) {
  if (!(norm1 <= kScaleTarget)) {
    return static_cast<int>(std::ceil(std::log2(norm1 / kScaleTarget)));
  }
  return 0;
}

// Factorials up to kTaylorOrder + 1 fit comfortably in double.
double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

}  // namespace

Matrix antisymmetrize(const Matrix& a) {
  require(a.square(), ErrorKind::Shape, "antisymmetrize: matrix not square");
  int64_t n = a.rows();
  Matrix s(n, n);
  for (int64_t i = 0; i < n; ++i) {
    s(i, i) = 0.0;
    for (int64_t j = i + 1; j < n; ++j) {
      double v = 0.5 * (a(i, j) - a(j, i));
      s(i, j) = v;
      s(j, i) = -v;
    }
  }
  return s;
}

Matrix antisymmetrize_adjoint(const Matrix& s_adjoint) {
  require(s_adjoint.square(), ErrorKind::Shape,
          "antisymmetrize_adjoint: matrix not square");
  int64_t n = s_adjoint.rows();
  Matrix da(n, n);
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = 0; j < n; ++j)
      da(i, j) = 0.5 * (s_adjoint(i, j) - s_adjoint(j, i));
  return da;
}

Matrix mat_exp(const Matrix& s) {
  require(s.square(), ErrorKind::Shape, "mat_exp: matrix not square");
  require(all_finite(s), ErrorKind::Numeric, "mat_exp: non-finite entries");
  int64_t n = s.rows();
  int sq = squarings_for(one_norm(s));

  Matrix b = s;
  scale(b, std::ldexp(1.0, -sq));

  Matrix e = Matrix::identity(n);
  Matrix power = Matrix::identity(n);
  for (int k = 1; k <= kTaylorOrder; ++k) {
    power = matmul(power, b);
    axpy(1.0 / factorial(k), power, e);
  }
  for (int j = 0; j < sq; ++j) e = matmul(e, e);
  return e;
}

Matrix mat_exp_adjoint(const Matrix& s, const Matrix& g_adjoint) {
  require(s.square(), ErrorKind::Shape, "mat_exp_adjoint: matrix not square");
  require(s.same_shape(g_adjoint), ErrorKind::Shape,
          "mat_exp_adjoint: adjoint shape mismatch");
  int64_t n = s.rows();
  int sq = squarings_for(one_norm(s));

  Matrix b = s;
  scale(b, std::ldexp(1.0, -sq));

  // Forward pass again, keeping the powers of B and each squaring stage.
  std::vector<Matrix> powers;  // powers[k] = B^k, k = 0..kTaylorOrder
  powers.push_back(Matrix::identity(n));
  Matrix e = Matrix::identity(n);
  for (int k = 1; k <= kTaylorOrder; ++k) {
    powers.push_back(matmul(powers.back(), b));
    axpy(1.0 / factorial(k), powers.back(), e);
  }
  std::vector<Matrix> stages;  // stages[j] = E after j squarings
  stages.push_back(e);
  for (int j = 0; j < sq; ++j) stages.push_back(matmul(stages.back(), stages.back()));

  // E_{j+1} = E_j E_j  =>  dE_j = dE_{j+1} E_j^T + E_j^T dE_{j+1}.
  Matrix de = g_adjoint;
  for (int j = sq - 1; j >= 0; --j) {
    Matrix next = matmul_nt(de, stages[j]);
    gemm_tn(stages[j], de, next, /*accumulate=*/true);
    de = std::move(next);
  }

  // dB = sum_m (B^m)^T dE (R_m)^T with R_m = sum_j B^j / (m+j+1)!.
  Matrix db(n, n);
  for (int m = 0; m < kTaylorOrder; ++m) {
    Matrix r(n, n);
    for (int j = 0; j + m + 1 <= kTaylorOrder; ++j)
      axpy(1.0 / factorial(m + j + 1), powers[j], r);
    Matrix de_rt = matmul_nt(de, r);
    gemm_tn(powers[m], de_rt, db, /*accumulate=*/true);
  }
  scale(db, std::ldexp(1.0, -sq));
  return db;
}

SymEig sym_eig(const Matrix& c) {
  require(c.square(), ErrorKind::Shape, "sym_eig: matrix not square");
  int64_t n = c.rows();

  // Defensive symmetrization.
  Matrix a(n, n);
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = 0; j < n; ++j) a(i, j) = 0.5 * (c(i, j) + c(j, i));
  require(all_finite(a), ErrorKind::Numeric, "sym_eig: non-finite entries");

  Matrix v = Matrix::identity(n);
  double norm = frobenius_norm(a);
  SymEig out;
  out.eigenvectors = Matrix(n, n);
  out.eigenvalues.assign(n, 0.0);

  auto off_norm = [&]() {
    double s = 0.0;
    for (int64_t i = 0; i < n; ++i)
      for (int64_t j = i + 1; j < n; ++j) s += 2.0 * a(i, j) * a(i, j);
    return std::sqrt(s);
  };

  int sweep = 0;
  if (norm > 0.0) {
    for (sweep = 0; sweep < kMaxSweeps; ++sweep) {
      if (off_norm() <= kJacobiTol * norm) break;
      for (int64_t p = 0; p < n - 1; ++p) {
        for (int64_t q = p + 1; q < n; ++q) {
          double apq = a(p, q);
          if (std::fabs(apq) <= 1e-300) continue;
          double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
          double t = (theta >= 0 ? 1.0 : -1.0) /
                     (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
          double cs = 1.0 / std::sqrt(t * t + 1.0);
          double sn = t * cs;
          double tau = sn / (1.0 + cs);

          a(p, p) -= t * apq;
          a(q, q) += t * apq;
          a(p, q) = a(q, p) = 0.0;
          for (int64_t r = 0; r < n; ++r) {
            if (r != p && r != q) {
              double arp = a(r, p), arq = a(r, q);
              a(r, p) = a(p, r) = arp - sn * (arq + tau * arp);
              a(r, q) = a(q, r) = arq + sn * (arp - tau * arq);
            }
            double vrp = v(r, p), vrq = v(r, q);
            v(r, p) = vrp - sn * (vrq + tau * vrp);
            v(r, q) = vrq + sn * (vrp - tau * vrq);
          }
        }
      }
    }
    if (sweep == kMaxSweeps && off_norm() > kJacobiTol * norm) {
      std::ostringstream msg;
      msg << "sym_eig: no convergence after " << kMaxSweeps
          << " sweeps (rel off-diagonal " << off_norm() / norm << ")";
      fail(ErrorKind::Numeric, msg.str());
    }
  }
  out.sweeps = sweep;

  std::vector<int64_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int64_t x, int64_t y) { return a(x, x) > a(y, y); });
  for (int64_t i = 0; i < n; ++i) {
    out.eigenvalues[i] = a(order[i], order[i]);
    for (int64_t r = 0; r < n; ++r) out.eigenvectors(r, i) = v(r, order[i]);
  }
  return out;
}

Matrix central_crop(const Matrix& m, int64_t d) {
  require(m.square(), ErrorKind::Shape, "central_crop: matrix not square");
  int64_t big = m.rows();
  require(big >= d, ErrorKind::Config, "central_crop: target larger than input");
  require((big - d) % 2 == 0, ErrorKind::Config,
          "central_crop: size difference must be even");
  int64_t off = (big - d) / 2;
  Matrix out(d, d);
  for (int64_t i = 0; i < d; ++i)
    for (int64_t j = 0; j < d; ++j) out(i, j) = m(i + off, j + off);
  return out;
}

Vector central_crop(const Vector& v, int64_t d) {
  int64_t big = static_cast<int64_t>(v.size());
  require(big >= d, ErrorKind::Config, "central_crop: target larger than input");
  require((big - d) % 2 == 0, ErrorKind::Config,
          "central_crop: size difference must be even");
  int64_t off = (big - d) / 2;
  return Vector(v.begin() + off, v.begin() + off + d);
}

Vector embed_center(const Vector& v, int64_t big) {
  int64_t d = static_cast<int64_t>(v.size());
  require(big >= d, ErrorKind::Config, "embed_center: target smaller than input");
  require((big - d) % 2 == 0, ErrorKind::Config,
          "embed_center: size difference must be even");
  Vector out(big, 0.0);
  std::copy(v.begin(), v.end(), out.begin() + (big - d) / 2);
  return out;
}

Matrix embed_center(const Matrix& m, int64_t big) {
  require(m.square(), ErrorKind::Shape, "embed_center: matrix not square");
  int64_t d = m.rows();
  require(big >= d && (big - d) % 2 == 0, ErrorKind::Config,
          "embed_center: bad target size");
  int64_t off = (big - d) / 2;
  Matrix out(big, big);
  for (int64_t i = 0; i < d; ++i)
    for (int64_t j = 0; j < d; ++j) out(i + off, j + off) = m(i, j);
  return out;
}

}  // namespace symforge
