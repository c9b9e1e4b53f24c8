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

#include "symforge/entropy.hpp"

#include <cmath>

namespace symforge {

CovTrace batch_covariance_trace(const Matrix& y) {
  require(y.rows() >= 2, ErrorKind::Config,
          "batch_covariance: need at least two rows");
  const int64_t n = y.rows(), d = y.cols();
  CovTrace t;
  t.yc = y;
  Vector mean(d, 0.0);
  for (int64_t r = 0; r < n; ++r) {
    const double* row = y.row(r);
    for (int64_t j = 0; j < d; ++j) mean[j] += row[j];
  }
  for (int64_t j = 0; j < d; ++j) mean[j] /= static_cast<double>(n);
  for (int64_t r = 0; r < n; ++r) {
    double* row = t.yc.row(r);
    for (int64_t j = 0; j < d; ++j) row[j] -= mean[j];
  }
  t.c = matmul_tn(t.yc, t.yc);
  scale(t.c, 1.0 / static_cast<double>(n));
  return t;
}

Matrix batch_covariance(const Matrix& y) { return batch_covariance_trace(y).c; }

void batch_covariance_backward(const CovTrace& trace, const Matrix& dc,
                               Matrix& dy) {
  const int64_t n = trace.yc.rows(), d = trace.yc.cols();
  require(dc.rows() == d && dc.cols() == d, ErrorKind::Shape,
          "batch_covariance_backward: dC shape mismatch");
  require(dy.rows() == n && dy.cols() == d, ErrorKind::Shape,
          "batch_covariance_backward: dY shape mismatch");

  // dYc = Yc (dC + dC^T) / n
  Matrix sym(d, d);
  for (int64_t i = 0; i < d; ++i)
    for (int64_t j = 0; j < d; ++j) sym(i, j) = dc(i, j) + dc(j, i);
  scale(sym, 1.0 / static_cast<double>(n));
  Matrix dyc = matmul(trace.yc, sym);

  // Centering adjoint: subtract the column means of dYc.
  Vector mean(d, 0.0);
  for (int64_t r = 0; r < n; ++r) {
    const double* row = dyc.row(r);
    for (int64_t j = 0; j < d; ++j) mean[j] += row[j];
  }
  for (int64_t j = 0; j < d; ++j) mean[j] /= static_cast<double>(n);
  for (int64_t r = 0; r < n; ++r) {
    double* out = dy.row(r);
    const double* row = dyc.row(r);
    for (int64_t j = 0; j < d; ++j) out[j] += row[j] - mean[j];
  }
}

LowRankEntropy lowrank_entropy(const Matrix& c, int64_t k, double alpha) {
  SymEig eig = sym_eig(c);
  const int64_t d = c.rows();
  LowRankEntropy ent;
  ent.h_per.resize(d);
  ent.weights.resize(d);
  ent.lambda.resize(d);
  ent.clamped.resize(d);
  ent.vectors = eig.eigenvectors;

  double wsum = 0.0, whsum = 0.0;
  for (int64_t i = 0; i < d; ++i) {
    double lam = eig.eigenvalues[i];
    bool clamp = !(lam > kEigenClamp);
    ent.lambda[i] = clamp ? kEigenClamp : lam;
    ent.clamped[i] = clamp;
    ent.h_per[i] = std::log(ent.lambda[i]);
    require(std::isfinite(ent.h_per[i]), ErrorKind::Numeric,
            "lowrank_entropy: non-finite eigenvalue log");
    // i is 0-based; the rank index in the soft threshold is 1-based.
    double w = 1.0 / (std::exp(alpha * static_cast<double>(i + 1 - k)) + 1.0);
    ent.weights[i] = w;
    wsum += w;
    whsum += w * ent.h_per[i];
  }
  require(wsum > 0.0, ErrorKind::Numeric, "lowrank_entropy: zero weight mass");
  ent.h_bar = whsum / wsum;
  return ent;
}

Matrix lowrank_entropy_backward(const LowRankEntropy& ent, double coef) {
  const int64_t d = static_cast<int64_t>(ent.h_per.size());
  double wsum = 0.0;
  for (double w : ent.weights) wsum += w;
  Matrix dc(d, d);
  for (int64_t i = 0; i < d; ++i) {
    if (ent.clamped[i]) continue;
    double g = coef * (ent.weights[i] / wsum) / ent.lambda[i];
    if (g == 0.0) continue;
    for (int64_t r = 0; r < d; ++r) {
      double gvr = g * ent.vectors(r, i);
      for (int64_t s = 0; s < d; ++s) dc(r, s) += gvr * ent.vectors(s, i);
    }
  }
  return dc;
}

double normalized_time(const Vector& lr_schedule, int64_t n) {
  const int64_t t = static_cast<int64_t>(lr_schedule.size());
  require(t >= 1 && n >= 1 && n <= t, ErrorKind::Config,
          "normalized_time: step outside schedule");
  double total = 0.0, prefix = 0.0;
  for (int64_t s = 0; s < t; ++s) {
    require(lr_schedule[s] >= 0.0, ErrorKind::Config,
            "normalized_time: negative learning rate");
    total += lr_schedule[s];
    if (s < n) prefix += lr_schedule[s];
  }
  require(total > 0.0, ErrorKind::Config, "normalized_time: zero total learning rate");
  return prefix / total;
}

int64_t current_rank(double t_n, int64_t d) {
  require(t_n >= 0.0 && t_n <= 1.0 + 1e-12, ErrorKind::Config,
          "current_rank: normalized time outside [0, 1]");
  int64_t k = static_cast<int64_t>(std::ceil(static_cast<double>(d) * t_n));
  if (k < 1) k = 1;
  if (k > d) k = d;
  return k;
}

}  // namespace symforge
