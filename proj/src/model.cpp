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

#include "symforge/model.hpp"

#include <cmath>

#include "symforge/linalg.hpp"

namespace symforge {

SymmetryModel init_model(int64_t d, int64_t pad, Rng& rng) {
  require(d >= 3 && d % 2 == 1, ErrorKind::Config, "init_model: d must be odd >= 3");
  require(pad >= 0, ErrorKind::Config, "init_model: negative padding");
  SymmetryModel m;
  m.d = d;
  m.dim = d + 2 * pad;
  m.p_max = (d - 1) / 2;
  m.p_min = -m.p_max;
  Matrix a(m.dim, m.dim);
  for (int64_t i = 0; i < a.size(); ++i) a.data()[i] = rng.normal(0.0, 1e-3);
  m.a = make_dual(a);
  m.psi0 = make_dual(Vector(m.dim, 0.0));
  return m;
}

Matrix make_generator(const SymmetryModel& model) {
  return mat_exp(antisymmetrize(model.a.value));
}

Vector inject_filter_noise(const Vector& psi0, double t_epoch, Rng& rng,
                           double sigma, double tau) {
  require(t_epoch >= 0.0, ErrorKind::Config, "inject_filter_noise: negative time");
  double amp = sigma * std::exp(-t_epoch / tau);
  Vector out = psi0;
  for (auto& v : out) v += amp * rng.normal();
  return out;
}

Vector normalize_filter(const Vector& psi_tilde) {
  double n = norm2(psi_tilde);
  require(n > 0.0, ErrorKind::Numeric, "normalize_filter: degenerate zero filter");
  Vector out = psi_tilde;
  scale(out, 1.0 / n);
  return out;
}

Matrix group_conv_matrix(const Matrix& g, const Vector& psi_hat, int64_t d,
                         int64_t p_min, int64_t p_max) {
  require(g.square() && g.rows() == static_cast<int64_t>(psi_hat.size()),
          ErrorKind::Shape, "group_conv_matrix: shape mismatch");
  Matrix l(d, static_cast<int64_t>(p_max - p_min + 1));
  Vector w = psi_hat;
  for (int64_t p = 0; p <= p_max; ++p) {
    if (p > 0) w = matvec_t(g, w);
    Vector col = central_crop(w, d);
    for (int64_t r = 0; r < d; ++r) l(r, p - p_min) = col[r];
  }
  w = psi_hat;
  for (int64_t q = 1; q <= -p_min; ++q) {
    w = matvec(g, w);
    Vector col = central_crop(w, d);
    for (int64_t r = 0; r < d; ++r) l(r, -q - p_min) = col[r];
  }
  return l;
}

Matrix model_apply(const Matrix& x, const Matrix& l) {
  return matmul(x, l);
}

ModelTrace model_forward(const SymmetryModel& model, const Vector& psi_noise) {
  require(psi_noise.size() == model.psi0.value.size(), ErrorKind::Shape,
          "model_forward: noise size mismatch");
  ModelTrace t;
  t.s = antisymmetrize(model.a.value);
  t.g = mat_exp(t.s);
  t.psi_tilde = model.psi0.value;
  axpy(1.0, psi_noise, t.psi_tilde);
  t.psi_norm = norm2(t.psi_tilde);
  t.psi_hat = normalize_filter(t.psi_tilde);

  t.w_pos.reserve(model.p_max + 1);
  t.w_pos.push_back(t.psi_hat);
  for (int64_t p = 1; p <= model.p_max; ++p)
    t.w_pos.push_back(matvec_t(t.g, t.w_pos.back()));

  t.w_neg.reserve(-model.p_min + 1);
  t.w_neg.push_back(t.psi_hat);
  for (int64_t q = 1; q <= -model.p_min; ++q)
    t.w_neg.push_back(matvec(t.g, t.w_neg.back()));

  t.l = Matrix(model.d, model.p_max - model.p_min + 1);
  for (int64_t p = model.p_min; p <= model.p_max; ++p) {
    const Vector& w = p >= 0 ? t.w_pos[p] : t.w_neg[-p];
    Vector col = central_crop(w, model.d);
    for (int64_t r = 0; r < model.d; ++r) t.l(r, p - model.p_min) = col[r];
  }
  return t;
}

void model_backward(SymmetryModel& model, const ModelTrace& trace,
                    const Matrix& l_adjoint) {
  require(l_adjoint.same_shape(trace.l), ErrorKind::Shape,
          "model_backward: adjoint shape mismatch");
  const int64_t d = model.d;
  const int64_t dim = model.dim;

  auto column_adjoint = [&](int64_t p) {
    Vector col(d);
    for (int64_t r = 0; r < d; ++r) col[r] = l_adjoint(r, p - model.p_min);
    return embed_center(col, dim);
  };

  Matrix g_bar(dim, dim);
  Vector psi_hat_bar(dim, 0.0);

  // Positive chain, w_p = G^T w_{p-1}: walk from the top power down. At each
  // step wbar holds the full adjoint of w_p; the step contributes
  // dG += w_{p-1} wbar^T and pushes wbar back through G.
  {
    Vector wbar(dim, 0.0);
    for (int64_t p = model.p_max; p >= 1; --p) {
      axpy(1.0, column_adjoint(p), wbar);
      add_outer(g_bar, trace.w_pos[p - 1], wbar);
      wbar = matvec(trace.g, wbar);
    }
    axpy(1.0, column_adjoint(0), wbar);  // the shared p = 0 column
    axpy(1.0, wbar, psi_hat_bar);
  }

  // Negative chain, w_q = G w_{q-1}: dG += wbar w_{q-1}^T.
  {
    Vector wbar(dim, 0.0);
    for (int64_t q = -model.p_min; q >= 1; --q) {
      axpy(1.0, column_adjoint(-q), wbar);
      add_outer(g_bar, wbar, trace.w_neg[q - 1]);
      wbar = matvec_t(trace.g, wbar);
    }
    axpy(1.0, wbar, psi_hat_bar);
  }

  // Normalization: psi_hat = psi_tilde / r with r = ||psi_tilde||.
  double proj = dot(trace.psi_hat, psi_hat_bar);
  Vector psi_tilde_bar = psi_hat_bar;
  axpy(-proj, trace.psi_hat, psi_tilde_bar);
  scale(psi_tilde_bar, 1.0 / trace.psi_norm);
  axpy(1.0, psi_tilde_bar, model.psi0.adjoint);

  Matrix s_bar = mat_exp_adjoint(trace.s, g_bar);
  Matrix a_bar = antisymmetrize_adjoint(s_bar);
  axpy(1.0, a_bar, model.a.adjoint);
}

}  // namespace symforge
