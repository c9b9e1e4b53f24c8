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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "symforge/linalg.hpp"
#include "test_util.hpp"

using namespace symforge;
using namespace symforge::test;

namespace {

// Independent matrix-exponential oracle for antisymmetric S: eigendecompose
// S^T S = -S^2 to find the invariant rotation planes, then assemble
// exp(S) = sum over planes of a 2-D rotation by theta plus the identity on
// the kernel. Relies only on sym_eig, which is verified separately by
// reconstruction.
Matrix exp_antisymmetric_oracle(const Matrix& s) {
  const int64_t n = s.rows();
  Matrix m = matmul_tn(s, s);  // eigenvalues theta^2, doubled per plane
  SymEig eig = sym_eig(m);
  double ev_scale = std::max(1.0, std::fabs(eig.eigenvalues[0]));

  Matrix g(n, n);
  std::vector<Vector> used;  // plane basis vectors found so far
  auto project_out = [&](Vector& v) {
    for (const auto& u : used) axpy(-dot(u, v), u, v);
  };

  for (int64_t idx = 0; idx < n; ++idx) {
    double theta2 = eig.eigenvalues[idx];
    Vector v(n);
    for (int64_t r = 0; r < n; ++r) v[r] = eig.eigenvectors(r, idx);
    project_out(v);
    if (norm2(v) < 1e-6) continue;  // partner of an already-built pair
    double nv = norm2(v);
    for (auto& x : v) x /= nv;
    if (theta2 < 1e-12 * ev_scale) {
      // kernel: exp acts as the identity
      add_outer(g, v, v);
      used.push_back(v);
      continue;
    }
    double theta = std::sqrt(theta2);
    Vector w = matvec(s, v);
    for (auto& x : w) x /= theta;

    // exp(S) v = cos v + sin w ; exp(S) w = -sin v + cos w
    double c = std::cos(theta), sn = std::sin(theta);
    for (int64_t r = 0; r < n; ++r) {
      for (int64_t cidx = 0; cidx < n; ++cidx) {
        g(r, cidx) += c * (v[r] * v[cidx] + w[r] * w[cidx]) +
                      sn * (w[r] * v[cidx] - v[r] * w[cidx]);
      }
    }
    used.push_back(v);
    used.push_back(w);
  }
  return g;
}

}  // namespace

TEST_CASE("antisymmetrize basics") {
  Matrix a(2, 2);
  a(0, 0) = 1; a(0, 1) = 2; a(1, 0) = 3; a(1, 1) = 4;
  Matrix s = antisymmetrize(a);
  CHECK(s(0, 0) == 0.0);
  CHECK(s(0, 1) == doctest::Approx(-0.5));
  CHECK(s(1, 0) == doctest::Approx(0.5));
  CHECK(s(1, 1) == 0.0);

  Matrix zero(3, 3);
  CHECK(frobenius_norm(antisymmetrize(zero)) == 0.0);

  // symmetric input cancels exactly
  Rng rng(11);
  Matrix b = random_matrix(rng, 4, 4);
  Matrix sym = matmul_tn(b, b);
  CHECK(frobenius_norm(antisymmetrize(sym)) == 0.0);

  Matrix rect(2, 3);
  CHECK_THROWS_AS(antisymmetrize(rect), Error);
}

TEST_CASE("mat_exp on closed forms") {
  Matrix zero(4, 4);
  CHECK(max_abs_diff(mat_exp(zero), Matrix::identity(4)) == 0.0);

  double theta = M_PI / 2;
  Matrix s(2, 2);
  s(0, 1) = -theta;
  s(1, 0) = theta;
  Matrix g = mat_exp(s);
  CHECK(std::fabs(g(0, 0)) < 1e-10);
  CHECK(g(0, 1) == doctest::Approx(-1.0).epsilon(1e-10));
  CHECK(g(1, 0) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(std::fabs(g(1, 1)) < 1e-10);
}

TEST_CASE("mat_exp matches the plane-rotation oracle on random antisymmetric input") {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(100 + seed);
    Matrix s = random_antisymmetric(rng, 5, 0.8);
    Matrix g = mat_exp(s);
    Matrix want = exp_antisymmetric_oracle(s);
    CHECK(max_abs_diff(g, want) < 1e-9);
    CHECK(orthogonality_defect(g) < 1e-10);
    CHECK(determinant(g) == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("mat_exp(antisymmetrize(A)) stays orthogonal up to large norms") {
  for (uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(300 + seed);
    Matrix a = random_matrix(rng, 7, 7);
    double target = 0.5 + 9.5 * rng.uniform();
    scale(a, target / frobenius_norm(a));  // ||A||_F up to 10
    Matrix g = mat_exp(antisymmetrize(a));
    CHECK(orthogonality_defect(g) < 1e-10);
  }
}

TEST_CASE("mat_exp_adjoint at zero is the identity map") {
  Matrix s(3, 3);
  Matrix gbar(3, 3);
  gbar(1, 2) = 1.0;
  Matrix adj = mat_exp_adjoint(s, gbar);
  CHECK(max_abs_diff(adj, gbar) < 1e-12);
}

TEST_CASE("mat_exp_adjoint matches central finite differences") {
  const double h = 1e-5;
  for (uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(500 + seed);
    int64_t n = 2 + static_cast<int64_t>(rng.below(7));  // up to 8x8
    Matrix s = random_matrix(rng, n, n, 0.7);
    Matrix gbar = random_matrix(rng, n, n);
    Matrix ds = random_matrix(rng, n, n);

    Matrix adj = mat_exp_adjoint(s, gbar);
    double got = frobenius_dot(adj, ds);

    Matrix sp = s, sm = s;
    axpy(h, ds, sp);
    axpy(-h, ds, sm);
    double want = (frobenius_dot(gbar, mat_exp(sp)) -
                   frobenius_dot(gbar, mat_exp(sm))) / (2 * h);
    CHECK(rel_error(got, want, 1e-6) < 1e-4);
  }
}

TEST_CASE("mat_exp_adjoint commuting closed form") {
  // With Gbar = Exp(S)^T every factor commutes and the adjoint collapses to
  // Exp(2S)^T.
  Rng rng(901);
  Matrix s = random_antisymmetric(rng, 4, 0.6);
  Matrix gbar = transpose(mat_exp(s));
  Matrix adj = mat_exp_adjoint(s, gbar);
  Matrix two_s = s;
  scale(two_s, 2.0);
  Matrix want = transpose(mat_exp(two_s));
  CHECK(max_abs_diff(adj, want) < 1e-9);
}

TEST_CASE("sym_eig on closed forms") {
  Matrix c(3, 3);
  c(0, 0) = 3; c(1, 1) = 1; c(2, 2) = 2;
  SymEig eig = sym_eig(c);
  CHECK(eig.eigenvalues[0] == doctest::Approx(3.0));
  CHECK(eig.eigenvalues[1] == doctest::Approx(2.0));
  CHECK(eig.eigenvalues[2] == doctest::Approx(1.0));

  Matrix c2(2, 2);
  c2(0, 0) = 2; c2(0, 1) = 1; c2(1, 0) = 1; c2(1, 1) = 2;
  SymEig e2 = sym_eig(c2);
  CHECK(e2.eigenvalues[0] == doctest::Approx(3.0));
  CHECK(e2.eigenvalues[1] == doctest::Approx(1.0));
  // leading eigenvector proportional to (1, 1)
  CHECK(std::fabs(std::fabs(e2.eigenvectors(0, 0)) - std::sqrt(0.5)) < 1e-10);
  CHECK(std::fabs(e2.eigenvectors(0, 0) - e2.eigenvectors(1, 0)) < 1e-10);
}

TEST_CASE("sym_eig reconstructs random SPD matrices") {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(700 + seed);
    Matrix c = random_spd(rng, 6);
    SymEig eig = sym_eig(c);
    // V Lambda V^T
    Matrix vl = eig.eigenvectors;
    for (int64_t col = 0; col < 6; ++col)
      for (int64_t r = 0; r < 6; ++r) vl(r, col) *= eig.eigenvalues[col];
    Matrix rec = matmul_nt(vl, eig.eigenvectors);
    CHECK(max_abs_diff(rec, c) < 1e-8 * std::max(1.0, frobenius_norm(c)));
    CHECK(orthogonality_defect(eig.eigenvectors) < 1e-8);
    for (int64_t i = 0; i + 1 < 6; ++i)
      CHECK(eig.eigenvalues[i] >= eig.eigenvalues[i + 1]);
  }
}

TEST_CASE("sym_eig eigenvalue derivative d lambda_i = v_i^T dC v_i") {
  const double h = 1e-6;
  int checked = 0;
  for (uint64_t seed = 0; seed < 40 && checked < 20; ++seed) {
    Rng rng(800 + seed);
    Matrix c = random_spd(rng, 5);
    SymEig eig = sym_eig(c);
    // only for well-separated spectra
    bool gaps_ok = true;
    for (int64_t i = 0; i + 1 < 5; ++i)
      if (eig.eigenvalues[i] - eig.eigenvalues[i + 1] < 1e-3) gaps_ok = false;
    if (!gaps_ok) continue;
    ++checked;

    Matrix dc_half = random_matrix(rng, 5, 5, 0.5);
    Matrix dc(5, 5);
    for (int64_t i = 0; i < 5; ++i)
      for (int64_t j = 0; j < 5; ++j) dc(i, j) = 0.5 * (dc_half(i, j) + dc_half(j, i));

    Matrix cp = c, cm = c;
    axpy(h, dc, cp);
    axpy(-h, dc, cm);
    SymEig ep = sym_eig(cp), em = sym_eig(cm);
    for (int64_t i = 0; i < 5; ++i) {
      double want = (ep.eigenvalues[i] - em.eigenvalues[i]) / (2 * h);
      Vector vi(5);
      for (int64_t r = 0; r < 5; ++r) vi[r] = eig.eigenvectors(r, i);
      double got = dot(vi, matvec(dc, vi));
      CHECK(rel_error(got, want, 1e-4) < 1e-4);
    }
  }
  CHECK(checked >= 10);
}

TEST_CASE("central_crop index arithmetic") {
  Matrix m(5, 5);
  for (int64_t i = 0; i < 25; ++i) m.data()[i] = static_cast<double>(i);
  Matrix c = central_crop(m, 3);
  CHECK(c(0, 0) == m(1, 1));
  CHECK(c(2, 2) == m(3, 3));

  CHECK(max_abs_diff(central_crop(m, 5), m) == 0.0);

  Matrix big(49, 49);
  big(8, 8) = 1.0;  // first interior element after dropping 8 per side
  Matrix cropped = central_crop(big, 33);
  CHECK(cropped(0, 0) == 1.0);

  CHECK_THROWS_AS(central_crop(m, 2), Error);  // odd difference

  Vector v{0, 1, 2, 3, 4};
  Vector vc = central_crop(v, 3);
  CHECK(vc == Vector{1, 2, 3});
  CHECK(embed_center(vc, 5) == Vector{0, 1, 2, 3, 0});
}

TEST_CASE("gemm variants agree with naive products") {
  Rng rng(42);
  Matrix a = random_matrix(rng, 7, 5);
  Matrix b = random_matrix(rng, 5, 6);
  Matrix c = matmul(a, b);
  for (int64_t i = 0; i < 7; ++i)
    for (int64_t j = 0; j < 6; ++j) {
      double want = 0;
      for (int64_t k = 0; k < 5; ++k) want += a(i, k) * b(k, j);
      CHECK(c(i, j) == doctest::Approx(want).epsilon(1e-12));
    }
  Matrix ct = matmul_tn(a, matmul(a, b));
  Matrix cn = matmul(transpose(a), matmul(a, b));
  CHECK(max_abs_diff(ct, cn) < 1e-12);
  Matrix cnt = matmul_nt(b, b);
  Matrix cnn = matmul(b, transpose(b));
  CHECK(max_abs_diff(cnt, cnn) < 1e-12);
}
