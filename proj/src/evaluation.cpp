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

#include "symforge/evaluation.hpp"

#include <cmath>

#include "symforge/linalg.hpp"

namespace symforge {

double frobenius_cosine(const Matrix& g1, const Matrix& g2) {
  require(g1.same_shape(g2), ErrorKind::Shape, "frobenius_cosine: shape mismatch");
  double n1 = frobenius_norm(g1), n2 = frobenius_norm(g2);
  require(n1 > 0.0 && n2 > 0.0, ErrorKind::Numeric,
          "frobenius_cosine: zero-norm matrix");
  return frobenius_dot(g1, g2) / (n1 * n2);
}

double generator_rmse(const Matrix& g1, const Matrix& g2) {
  require(g1.same_shape(g2), ErrorKind::Shape, "generator_rmse: shape mismatch");
  double s = 0.0;
  for (int64_t i = 0; i < g1.size(); ++i) {
    double diff = g1.data()[i] - g2.data()[i];
    s += diff * diff;
  }
  return std::sqrt(s / static_cast<double>(g1.size()));
}

GeneratorAlignment best_alignment(const Matrix& learned, const Matrix& ideal) {
  require(learned.same_shape(ideal), ErrorKind::Shape,
          "best_alignment: shape mismatch");
  GeneratorAlignment best;
  bool first = true;
  for (bool transposed : {false, true}) {
    Matrix candidate = transposed ? transpose(learned) : learned;
    for (int sign : {+1, -1}) {
      Matrix oriented = candidate;
      if (sign < 0) scale(oriented, -1.0);
      double cos = frobenius_cosine(oriented, ideal);
      if (first || cos > best.cosine) {
        first = false;
        best.oriented = oriented;
        best.transposed = transposed;
        best.sign = sign;
        best.cosine = cos;
        best.rmse = generator_rmse(oriented, ideal);
      }
    }
  }
  return best;
}

int64_t minimality_check(const Matrix& learned, const Matrix& ideal,
                         int64_t max_power) {
  require(max_power >= 1, ErrorKind::Config, "minimality_check: max_power < 1");
  Matrix power = ideal;
  int64_t best_p = 1;
  double best_cos = best_alignment(learned, power).cosine;
  for (int64_t p = 2; p <= max_power; ++p) {
    power = matmul(power, ideal);
    double cos = best_alignment(learned, power).cosine;
    if (cos > best_cos) {
      best_cos = cos;
      best_p = p;
    }
  }
  return best_p;
}

double equivariance_residual(const Matrix& l, const Matrix& g_ideal,
                             const Matrix& x, int shift_dir) {
  require(shift_dir == 1 || shift_dir == -1, ErrorKind::Config,
          "equivariance_residual: shift must be +-1");
  const int64_t d = l.cols();
  Matrix y = matmul(x, l);
  Matrix y_t = matmul(matmul_nt(x, g_ideal), l);  // forward of x G^T
  int64_t trim = (d - 1) / 4;

  double num = 0.0, den = 0.0;
  for (int64_t r = 0; r < y.rows(); ++r) {
    for (int64_t q = trim; q < d - trim; ++q) {
      int64_t qs = q + shift_dir;
      if (qs < 0 || qs >= d) continue;
      double diff = y(r, qs) - y_t(r, q);
      num += diff * diff;
      den += y(r, qs) * y(r, qs);
    }
  }
  require(den > 0.0, ErrorKind::Numeric, "equivariance_residual: zero output");
  return std::sqrt(num / den);
}

double equivariance_residual(const Matrix& l, const Matrix& g_ideal,
                             const Matrix& x) {
  return std::min(equivariance_residual(l, g_ideal, x, +1),
                  equivariance_residual(l, g_ideal, x, -1));
}

double reconstruction_error(const Matrix& y, const Matrix& h) {
  require(y.same_shape(h), ErrorKind::Shape, "reconstruction_error: shape mismatch");
  const int64_t n = y.rows(), d = y.cols();
  double best = -1.0;
  for (bool reversed : {false, true}) {
    for (int sign : {+1, -1}) {
      double s = 0.0;
      for (int64_t r = 0; r < n; ++r) {
        const double* yr = y.row(r);
        const double* hr = h.row(r);
        for (int64_t j = 0; j < d; ++j) {
          double v = sign * (reversed ? yr[d - 1 - j] : yr[j]);
          double diff = v - hr[j];
          s += diff * diff;
        }
      }
      double rmse = std::sqrt(s / static_cast<double>(n * d));
      if (best < 0.0 || rmse < best) best = rmse;
    }
  }
  return best;
}

Vector markov_diagnostic(const Matrix& y) {
  const int64_t n = y.rows(), d = y.cols();
  require(n >= 10 * d, ErrorKind::Config,
          "markov_diagnostic: need at least 10*d rows");
  // Correlation matrix of adjacent triples.
  Vector mean(d, 0.0), var(d, 0.0);
  for (int64_t r = 0; r < n; ++r)
    for (int64_t j = 0; j < d; ++j) mean[j] += y(r, j);
  for (int64_t j = 0; j < d; ++j) mean[j] /= static_cast<double>(n);
  auto corr = [&](int64_t a, int64_t b) {
    double cab = 0.0, caa = 0.0, cbb = 0.0;
    for (int64_t r = 0; r < n; ++r) {
      double xa = y(r, a) - mean[a];
      double xb = y(r, b) - mean[b];
      cab += xa * xb;
      caa += xa * xa;
      cbb += xb * xb;
    }
    double den = std::sqrt(caa * cbb);
    return den > 0.0 ? cab / den : 0.0;
  };
  Vector profile;
  profile.reserve(d - 2);
  for (int64_t i = 1; i + 1 < d; ++i) {
    double r_ac = corr(i - 1, i + 1);
    double r_ab = corr(i - 1, i);
    double r_bc = corr(i, i + 1);
    double den = std::sqrt((1.0 - r_ab * r_ab) * (1.0 - r_bc * r_bc));
    profile.push_back(den > 1e-12 ? (r_ac - r_ab * r_bc) / den : 0.0);
  }
  return profile;
}

EvalReport evaluate_model(const SymmetryModel& model, const Dataset& data,
                          int64_t eval_rows) {
  EvalReport report;
  const int64_t d = model.d;
  require(d == data.x.cols(), ErrorKind::Shape,
          "evaluate_model: model and dataset dimension differ");

  Matrix g_full = make_generator(model);
  Matrix g = central_crop(g_full, d);
  GeneratorAlignment align = best_alignment(g, data.ideal_generator);
  report.cosine_similarity = align.cosine;
  report.rmse = align.rmse;
  report.orientation = align.transposed ? "transposed" : "as-is";
  report.sign = align.sign;
  report.minimal_power = minimality_check(g, data.ideal_generator, (d - 1) / 2);

  int64_t rows = eval_rows > 0 ? std::min(eval_rows, data.x.rows()) : data.x.rows();
  Matrix x(rows, d);
  for (int64_t r = 0; r < rows; ++r)
    std::copy(data.x.row(r), data.x.row(r) + d, x.row(r));
  Matrix h(rows, d);
  for (int64_t r = 0; r < rows; ++r)
    std::copy(data.h.row(r), data.h.row(r) + d, h.row(r));

  Vector psi_hat = normalize_filter(model.psi0.value);
  Matrix l = group_conv_matrix(g_full, psi_hat, d, model.p_min, model.p_max);
  report.equivariance_residual = equivariance_residual(l, data.ideal_generator, x);
  Matrix y = model_apply(x, l);
  report.reconstruction_rmse = reconstruction_error(y, h);
  report.markov_profile = markov_diagnostic(y);
  return report;
}

}  // namespace symforge
