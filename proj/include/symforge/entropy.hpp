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

#include "symforge/linalg.hpp"
#include "symforge/matrix.hpp"

namespace symforge {

// Eigenvalues below this are clamped before the log.
constexpr double kEigenClamp = 1e-10;

struct CovTrace {
  Matrix yc;  // centered batch
  Matrix c;   // yc^T yc / n
};

// Column-centered second-moment matrix C = Yc^T Yc / n.
CovTrace batch_covariance_trace(const Matrix& y);
Matrix batch_covariance(const Matrix& y);

// Adjoint: dY += (Yc (dC + dC^T) / n) re-centered through the column means.
void batch_covariance_backward(const CovTrace& trace, const Matrix& dc,
                               Matrix& dy);

struct LowRankEntropy {
  double h_bar = 0.0;
  Vector h_per;      // log eigenvalues, descending order
  Vector weights;    // soft threshold w_ki
  Vector lambda;     // clamped eigenvalues
  Matrix vectors;    // eigenvectors matching h_per
  std::vector<bool> clamped;
};

// Per-rank entropy surrogate: weighted mean of log-eigenvalues with the
// logistic weights w_ki = 1 / (exp(alpha (i - k)) + 1), i being the 1-based
// descending rank.
LowRankEntropy lowrank_entropy(const Matrix& c, int64_t k, double alpha);

// dC = coef * sum_i g_i v_i v_i^T with g_i = (w_i / sum w) / lambda_i and
// zero for clamped eigenvalues. Eigenvector derivatives never enter because
// h_bar depends on the spectrum alone.
Matrix lowrank_entropy_backward(const LowRankEntropy& ent, double coef);

// t_n = sum_{s<=n} lr(s) / sum_{s<=T} lr(s); the schedule must be declared
// up front so the denominator is known from step 1.
double normalized_time(const Vector& lr_schedule, int64_t n);

// k = max(1, ceil(d t_n)).
int64_t current_rank(double t_n, int64_t d);

}  // namespace symforge
