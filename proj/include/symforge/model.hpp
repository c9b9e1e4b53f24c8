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

#include "symforge/matrix.hpp"
#include "symforge/rng.hpp"

namespace symforge {

// Learnable symmetry model: a padded antisymmetric parameter A whose
// exponential is the orthogonal generator, plus the resolving filter.
// Powers of the generator are taken at the padded dimension and each
// resulting column is centrally cropped to the data dimension.
struct SymmetryModel {
  int64_t d = 0;      // data dimension
  int64_t dim = 0;    // padded dimension D = d + 2*pad
  int64_t p_min = 0;  // generator power range, p_max = (d-1)/2 = -p_min
  int64_t p_max = 0;
  DualSlot<Matrix> a;     // D x D
  DualSlot<Vector> psi0;  // D

  void zero_adjoints() {
    a.adjoint.zero();
    std::fill(psi0.adjoint.begin(), psi0.adjoint.end(), 0.0);
  }
};

// A ~ N(0, 1e-3) elementwise, psi0 = 0 (noise injection keeps the filter
// nondegenerate early in training).
SymmetryModel init_model(int64_t d, int64_t pad, Rng& rng);

// Exp((A - A^T)/2).
Matrix make_generator(const SymmetryModel& model);

// psi0 + eta * exp(-t/tau), eta ~ N(0, sigma^2) i.i.d.
Vector inject_filter_noise(const Vector& psi0, double t_epoch, Rng& rng,
                           double sigma = 0.1, double tau = 10.0);

// psi / ||psi||_2; degenerate input is an error (only reachable with noise
// injection disabled).
Vector normalize_filter(const Vector& psi_tilde);

// Column p - p_min is central_crop((G^p)^T psi_hat, d), p in [p_min, p_max].
// Negative powers use G^T, which equals the inverse exactly for orthogonal G.
Matrix group_conv_matrix(const Matrix& g, const Vector& psi_hat, int64_t d,
                         int64_t p_min, int64_t p_max);

// Y = X L.
Matrix model_apply(const Matrix& x, const Matrix& l);

// Everything the backward pass needs from one forward evaluation.
struct ModelTrace {
  Matrix s;               // (A - A^T)/2
  Matrix g;               // Exp(S)
  Vector psi_tilde;
  double psi_norm = 0.0;
  Vector psi_hat;
  std::vector<Vector> w_pos;  // w_pos[p] = (G^T)^p psi_hat, p = 0..p_max
  std::vector<Vector> w_neg;  // w_neg[q] = G^q psi_hat, q = 0..-p_min
  Matrix l;                   // d x d
};

// Forward with an explicit additive filter perturbation (the trainer passes
// the decayed noise; tests pass a fixed vector so finite differences see a
// deterministic function).
ModelTrace model_forward(const SymmetryModel& model, const Vector& psi_noise);

// Accumulates dLoss/dA and dLoss/dpsi0 into the model adjoints given
// dLoss/dL from the losses.
void model_backward(SymmetryModel& model, const ModelTrace& trace,
                    const Matrix& l_adjoint);

}  // namespace symforge
