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

#include <utility>
#include <vector>

#include "symforge/matrix.hpp"
#include "symforge/rng.hpp"

namespace symforge {

// ---------------------------------------------------------------------------
// Marginal estimators: one M-kernel Gaussian mixture per output component.
// Weights live on the simplex through a softmax of logits; sigma is floored
// at 1e-4 via sigma = floor + exp(raw).
// ---------------------------------------------------------------------------

struct MarginalEstimator {
  int64_t d = 0;
  int kernels = 4;
  DualSlot<Matrix> logit_w;    // d x M
  DualSlot<Matrix> mu;         // d x M
  DualSlot<Matrix> raw_sigma;  // d x M

  void zero_adjoints() {
    logit_w.adjoint.zero();
    mu.adjoint.zero();
    raw_sigma.adjoint.zero();
  }
};

constexpr double kSigmaFloor = 1e-4;

MarginalEstimator init_marginal(int64_t d, int kernels);

// log sum_m w_im K(v; mu_im, sigma_im), computed by log-sum-exp.
double marginal_logpdf(const MarginalEstimator& est, int64_t i, double v);

// Same value, plus d(logpdf)/dv with parameters frozen.
double marginal_logpdf_grad(const MarginalEstimator& est, int64_t i, double v,
                            double* dv);

// -mean(log f_i) over rows of column i.
double marginal_entropy(const MarginalEstimator& est, int64_t i, const Matrix& y);

// Entropy of column i with gradient accumulation: parameter adjoints get
// coef_param * dH/dparam, and dy (when non-null) gets coef_y * dH/dY.
double marginal_entropy_accumulate(MarginalEstimator& est, int64_t i,
                                   const Matrix& y, double coef_param,
                                   double coef_y, Matrix* dy);

// ---------------------------------------------------------------------------
// Conditional estimators: three dense networks sharing one masking scheme.
// Input is a d-vector that is zero except for the kept component; outputs are
// d x M mixture parameters (kernel logits / means / pre-activation sigmas).
// Hidden layers use LeakyReLU with slope 0.1; sigma = exp(scale * tanh(.)).
// ---------------------------------------------------------------------------

struct Dense {
  DualSlot<Matrix> w;  // out x in
  DualSlot<Vector> b;  // out
};

struct Mlp {
  Dense l1, l2, l3;
};

struct ConditionalEstimator {
  int64_t d = 0;
  int kernels = 4;
  int64_t hidden = 0;
  double sigma_scale = 3.0;
  Mlp net_w, net_mu, net_sigma;

  void zero_adjoints();
};

ConditionalEstimator init_conditional(int64_t d, int kernels,
                                      int64_t hidden_multiple, Rng& rng);

// A batch of masked inputs: entry e keeps value val[e] at position pos[e].
struct CondBatch {
  std::vector<int> pos;
  Vector val;
  int64_t size() const { return static_cast<int64_t>(pos.size()); }
};

struct NetTrace {
  Matrix a1, a2, a3;  // post-activation layer outputs, E x {hidden,hidden,d*M}
};

struct CondTrace {
  NetTrace w, mu, sigma;
};

CondTrace cond_forward(const ConditionalEstimator& est, const CondBatch& batch);

// log f_{j|i} for eval row e under output slot j.
double cond_logpdf(const ConditionalEstimator& est, const CondTrace& trace,
                   int64_t e, int64_t j, double y);

// Same value; adds coef * d(logpdf)/d(a3 slots) into the per-net output
// adjoints and coef * d(logpdf)/dy into *dy when non-null.
double cond_logpdf_grad(const ConditionalEstimator& est, const CondTrace& trace,
                        int64_t e, int64_t j, double y, double coef,
                        Matrix* da3_w, Matrix* da3_mu, Matrix* da3_sigma,
                        double* dy);

// Propagates output adjoints back through the three networks. to_weights
// accumulates parameter adjoints; dval, when non-null, receives gradients
// with respect to the masked input values.
void cond_backward(ConditionalEstimator& est, const CondBatch& batch,
                   const CondTrace& trace, const Matrix& da3_w,
                   const Matrix& da3_mu, const Matrix& da3_sigma,
                   bool to_weights, Vector* dval);

// Row n keeps component (n + offset) mod d.
std::vector<int> mask_batch(int64_t rows, int64_t d, int64_t offset);

// Single-row convenience: runs the networks on the masked row and evaluates
// output slot j (j != kept_i) at y_j.
double conditional_logpdf(const ConditionalEstimator& est, const Vector& row,
                          int64_t kept_i, int64_t j, double y_j);

}  // namespace symforge
