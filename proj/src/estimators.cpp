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

#include "symforge/estimators.hpp"

#include <cmath>

#include "symforge/threading.hpp"

namespace symforge {

namespace {

constexpr int kMaxKernels = 16;
constexpr double kLeakySlope = 0.1;
constexpr double kLog2Pi = 1.8378770664093453;

struct MixEval {
  int m;
  double lp;
  double r[kMaxKernels];      // posterior responsibilities
  double q[kMaxKernels];      // softmax of the logits
  double z[kMaxKernels];      // standardized residuals
  double sigma[kMaxKernels];
};

// Mixture log-density with simplex weights softmax(logits); the kernel
// score is s_m = logit_m - z^2/2 - log sigma - log(2 pi)/2 and
// lp = LSE(s) - LSE(logits).
MixEval mix_eval(const double* logits, const double* mus, const double* sigmas,
                 int m, double y) {
  MixEval e;
  e.m = m;
  double s[kMaxKernels];
  double smax = -1e300, lmax = -1e300;
  for (int k = 0; k < m; ++k) {
    e.sigma[k] = sigmas[k];
    e.z[k] = (y - mus[k]) / sigmas[k];
    s[k] = logits[k] - 0.5 * e.z[k] * e.z[k] - std::log(sigmas[k]) - 0.5 * kLog2Pi;
    smax = std::max(smax, s[k]);
    lmax = std::max(lmax, logits[k]);
  }
  double ssum = 0.0, lsum = 0.0;
  for (int k = 0; k < m; ++k) {
    e.r[k] = std::exp(s[k] - smax);
    ssum += e.r[k];
    e.q[k] = std::exp(logits[k] - lmax);
    lsum += e.q[k];
  }
  for (int k = 0; k < m; ++k) {
    e.r[k] /= ssum;
    e.q[k] /= lsum;
  }
  e.lp = (smax + std::log(ssum)) - (lmax + std::log(lsum));
  return e;
}

double mix_dy(const MixEval& e) {
  double g = 0.0;
  for (int k = 0; k < e.m; ++k) g -= e.r[k] * e.z[k] / e.sigma[k];
  return g;
}

double leaky(double x) { return x > 0.0 ? x : kLeakySlope * x; }
double leaky_slope_from_output(double a) { return a > 0.0 ? 1.0 : kLeakySlope; }

void matrix_normal_fill(Matrix& m, double sd, Rng& rng) {
  for (int64_t i = 0; i < m.size(); ++i) m.data()[i] = rng.normal(0.0, sd);
}

Dense init_dense(int64_t out, int64_t in, Rng& rng) {
  Dense d;
  Matrix w(out, in);
  matrix_normal_fill(w, 1.0 / std::sqrt(static_cast<double>(in)), rng);
  d.w = make_dual(w);
  d.b = make_dual(Vector(out, 0.0));
  return d;
}

Mlp init_mlp(int64_t d, int64_t hidden, int64_t out, Rng& rng) {
  Mlp net;
  net.l1 = init_dense(hidden, d, rng);
  net.l2 = init_dense(hidden, hidden, rng);
  net.l3 = init_dense(out, hidden, rng);
  return net;
}

// Forward one network over the masked batch. The input has exactly one
// nonzero, so layer 1 reduces to scaling a single weight column.
NetTrace net_forward(const Mlp& net, const CondBatch& batch, bool last_linear) {
  const int64_t e_count = batch.size();
  const int64_t hidden = net.l1.w.value.rows();
  const int64_t out = net.l3.w.value.rows();
  NetTrace t;
  t.a1 = Matrix(e_count, hidden);
  t.a2 = Matrix(e_count, hidden);
  t.a3 = Matrix(e_count, out);

  const Matrix& w1 = net.l1.w.value;
  const Vector& b1 = net.l1.b.value;
  parallel_for(e_count, 64, [&](int64_t lo, int64_t hi) {
    for (int64_t e = lo; e < hi; ++e) {
      double v = batch.val[e];
      int p = batch.pos[e];
      double* row = t.a1.row(e);
      for (int64_t h = 0; h < hidden; ++h) row[h] = leaky(w1(h, p) * v + b1[h]);
    }
  });

  gemm_nt(t.a1, net.l2.w.value, t.a2);
  const Vector& b2 = net.l2.b.value;
  parallel_for(e_count, 64, [&](int64_t lo, int64_t hi) {
    for (int64_t e = lo; e < hi; ++e) {
      double* row = t.a2.row(e);
      for (int64_t h = 0; h < hidden; ++h) row[h] = leaky(row[h] + b2[h]);
    }
  });

  gemm_nt(t.a2, net.l3.w.value, t.a3);
  const Vector& b3 = net.l3.b.value;
  parallel_for(e_count, 64, [&](int64_t lo, int64_t hi) {
    for (int64_t e = lo; e < hi; ++e) {
      double* row = t.a3.row(e);
      for (int64_t o = 0; o < out; ++o) row[o] += b3[o];
    }
  });
  (void)last_linear;
  return t;
}

// Shared reverse pass for one network.
void net_backward(Mlp& net, const CondBatch& batch, const NetTrace& t,
                  const Matrix& da3, bool to_weights, Vector* dval) {
  const int64_t e_count = batch.size();
  const int64_t hidden = net.l2.w.value.rows();

  if (to_weights) {
    gemm_tn(da3, t.a2, net.l3.w.adjoint, /*accumulate=*/true);
    Vector& db3 = net.l3.b.adjoint;
    for (int64_t e = 0; e < e_count; ++e) {
      const double* row = da3.row(e);
      for (size_t o = 0; o < db3.size(); ++o) db3[o] += row[o];
    }
  }

  Matrix d2(e_count, hidden);
  gemm_nn(da3, net.l3.w.value, d2);
  parallel_for(e_count, 64, [&](int64_t lo, int64_t hi) {
    for (int64_t e = lo; e < hi; ++e) {
      double* row = d2.row(e);
      const double* a2 = t.a2.row(e);
      for (int64_t h = 0; h < hidden; ++h) row[h] *= leaky_slope_from_output(a2[h]);
    }
  });

  if (to_weights) {
    gemm_tn(d2, t.a1, net.l2.w.adjoint, /*accumulate=*/true);
    Vector& db2 = net.l2.b.adjoint;
    for (int64_t e = 0; e < e_count; ++e) {
      const double* row = d2.row(e);
      for (size_t h = 0; h < db2.size(); ++h) db2[h] += row[h];
    }
  }

  Matrix d1(e_count, hidden);
  gemm_nn(d2, net.l2.w.value, d1);
  parallel_for(e_count, 64, [&](int64_t lo, int64_t hi) {
    for (int64_t e = lo; e < hi; ++e) {
      double* row = d1.row(e);
      const double* a1 = t.a1.row(e);
      for (int64_t h = 0; h < hidden; ++h) row[h] *= leaky_slope_from_output(a1[h]);
    }
  });

  const Matrix& w1 = net.l1.w.value;
  if (to_weights) {
    Matrix& dw1 = net.l1.w.adjoint;
    Vector& db1 = net.l1.b.adjoint;
    for (int64_t e = 0; e < e_count; ++e) {
      const double* row = d1.row(e);
      double v = batch.val[e];
      int p = batch.pos[e];
      for (int64_t h = 0; h < hidden; ++h) {
        dw1(h, p) += row[h] * v;
        db1[h] += row[h];
      }
    }
  }
  if (dval) {
    parallel_for(e_count, 64, [&](int64_t lo, int64_t hi) {
      for (int64_t e = lo; e < hi; ++e) {
        const double* row = d1.row(e);
        int p = batch.pos[e];
        double g = 0.0;
        for (int64_t h = 0; h < hidden; ++h) g += row[h] * w1(h, p);
        (*dval)[e] += g;
      }
    });
  }
}

}  // namespace

MarginalEstimator init_marginal(int64_t d, int kernels) {
  require(kernels >= 1 && kernels <= kMaxKernels, ErrorKind::Config,
          "init_marginal: kernel count out of range");
  MarginalEstimator est;
  est.d = d;
  est.kernels = kernels;
  est.logit_w = make_dual(Matrix(d, kernels));
  Matrix mu(d, kernels);
  // Spread the kernels a little so the initial mixture is not a point mass.
  for (int64_t i = 0; i < d; ++i)
    for (int k = 0; k < kernels; ++k)
      mu(i, k) = 0.5 * (k - 0.5 * (kernels - 1));
  est.mu = make_dual(mu);
  est.raw_sigma = make_dual(Matrix(d, kernels));  // raw 0 -> sigma ~ 1
  return est;
}

double marginal_logpdf(const MarginalEstimator& est, int64_t i, double v) {
  return marginal_logpdf_grad(est, i, v, nullptr);
}

double marginal_logpdf_grad(const MarginalEstimator& est, int64_t i, double v,
                            double* dv) {
  const int m = est.kernels;
  double sigmas[kMaxKernels];
  for (int k = 0; k < m; ++k)
    sigmas[k] = kSigmaFloor + std::exp(est.raw_sigma.value(i, k));
  MixEval e = mix_eval(est.logit_w.value.row(i), est.mu.value.row(i), sigmas, m, v);
  if (dv) *dv = mix_dy(e);
  return e.lp;
}

double marginal_entropy(const MarginalEstimator& est, int64_t i, const Matrix& y) {
  require(y.rows() >= 1, ErrorKind::Config, "marginal_entropy: empty batch");
  double sum = 0.0;
  for (int64_t r = 0; r < y.rows(); ++r) sum += marginal_logpdf(est, i, y(r, i));
  return -sum / static_cast<double>(y.rows());
}

double marginal_entropy_accumulate(MarginalEstimator& est, int64_t i,
                                   const Matrix& y, double coef_param,
                                   double coef_y, Matrix* dy) {
  require(y.rows() >= 1, ErrorKind::Config, "marginal_entropy: empty batch");
  const int m = est.kernels;
  const int64_t n = y.rows();
  double sigmas[kMaxKernels], dsig_draw[kMaxKernels];
  for (int k = 0; k < m; ++k) {
    double ex = std::exp(est.raw_sigma.value(i, k));
    sigmas[k] = kSigmaFloor + ex;
    dsig_draw[k] = ex;
  }
  const double* logits = est.logit_w.value.row(i);
  const double* mus = est.mu.value.row(i);

  // d(entropy)/d(.) = -(1/n) sum d(lp)/d(.)
  const double wp = -coef_param / static_cast<double>(n);
  const double wy = -coef_y / static_cast<double>(n);
  double sum = 0.0;
  for (int64_t r = 0; r < n; ++r) {
    MixEval e = mix_eval(logits, mus, sigmas, m, y(r, i));
    sum += e.lp;
    if (coef_param != 0.0) {
      for (int k = 0; k < m; ++k) {
        est.logit_w.adjoint(i, k) += wp * (e.r[k] - e.q[k]);
        est.mu.adjoint(i, k) += wp * e.r[k] * e.z[k] / e.sigma[k];
        double dlp_dsigma = e.r[k] * (e.z[k] * e.z[k] - 1.0) / e.sigma[k];
        est.raw_sigma.adjoint(i, k) += wp * dlp_dsigma * dsig_draw[k];
      }
    }
    if (dy && coef_y != 0.0) (*dy)(r, i) += wy * mix_dy(e);
  }
  return -sum / static_cast<double>(n);
}

void ConditionalEstimator::zero_adjoints() {
  for (Mlp* net : {&net_w, &net_mu, &net_sigma}) {
    for (Dense* l : {&net->l1, &net->l2, &net->l3}) {
      l->w.adjoint.zero();
      std::fill(l->b.adjoint.begin(), l->b.adjoint.end(), 0.0);
    }
  }
}

ConditionalEstimator init_conditional(int64_t d, int kernels,
                                      int64_t hidden_multiple, Rng& rng) {
  require(kernels >= 1 && kernels <= kMaxKernels, ErrorKind::Config,
          "init_conditional: kernel count out of range");
  ConditionalEstimator est;
  est.d = d;
  est.kernels = kernels;
  est.hidden = hidden_multiple * d * kernels;
  int64_t out = d * kernels;
  est.net_w = init_mlp(d, est.hidden, out, rng);
  est.net_mu = init_mlp(d, est.hidden, out, rng);
  est.net_sigma = init_mlp(d, est.hidden, out, rng);
  return est;
}

CondTrace cond_forward(const ConditionalEstimator& est, const CondBatch& batch) {
  require(batch.pos.size() == batch.val.size(), ErrorKind::Shape,
          "cond_forward: batch fields disagree");
  CondTrace t;
  t.w = net_forward(est.net_w, batch, true);
  t.mu = net_forward(est.net_mu, batch, true);
  t.sigma = net_forward(est.net_sigma, batch, true);
  return t;
}

double cond_logpdf(const ConditionalEstimator& est, const CondTrace& trace,
                   int64_t e, int64_t j, double y) {
  return cond_logpdf_grad(est, trace, e, j, y, 0.0, nullptr, nullptr, nullptr,
                          nullptr);
}

double cond_logpdf_grad(const ConditionalEstimator& est, const CondTrace& trace,
                        int64_t e, int64_t j, double y, double coef,
                        Matrix* da3_w, Matrix* da3_mu, Matrix* da3_sigma,
                        double* dy) {
  const int m = est.kernels;
  const int64_t slot = j * m;
  const double* logits = trace.w.a3.row(e) + slot;
  const double* mus = trace.mu.a3.row(e) + slot;
  const double* raw = trace.sigma.a3.row(e) + slot;

  double sigmas[kMaxKernels], tanh_raw[kMaxKernels];
  const double c = est.sigma_scale;
  for (int k = 0; k < m; ++k) {
    tanh_raw[k] = std::tanh(raw[k]);
    sigmas[k] = std::exp(c * tanh_raw[k]);
  }
  MixEval ev = mix_eval(logits, mus, sigmas, m, y);
  if (coef != 0.0) {
    for (int k = 0; k < m; ++k) {
      if (da3_w) (*da3_w)(e, slot + k) += coef * (ev.r[k] - ev.q[k]);
      if (da3_mu) (*da3_mu)(e, slot + k) += coef * ev.r[k] * ev.z[k] / ev.sigma[k];
      if (da3_sigma) {
        double dlp_dsigma = ev.r[k] * (ev.z[k] * ev.z[k] - 1.0) / ev.sigma[k];
        double dsigma_draw = ev.sigma[k] * c * (1.0 - tanh_raw[k] * tanh_raw[k]);
        (*da3_sigma)(e, slot + k) += coef * dlp_dsigma * dsigma_draw;
      }
    }
    if (dy) *dy += coef * mix_dy(ev);
  }
  return ev.lp;
}

void cond_backward(ConditionalEstimator& est, const CondBatch& batch,
                   const CondTrace& trace, const Matrix& da3_w,
                   const Matrix& da3_mu, const Matrix& da3_sigma,
                   bool to_weights, Vector* dval) {
  net_backward(est.net_w, batch, trace.w, da3_w, to_weights, dval);
  net_backward(est.net_mu, batch, trace.mu, da3_mu, to_weights, dval);
  net_backward(est.net_sigma, batch, trace.sigma, da3_sigma, to_weights, dval);
}

std::vector<int> mask_batch(int64_t rows, int64_t d, int64_t offset) {
  require(rows >= 1, ErrorKind::Config, "mask_batch: empty batch");
  std::vector<int> kept(rows);
  for (int64_t n = 0; n < rows; ++n)
    kept[n] = static_cast<int>((n + offset) % d);
  return kept;
}

double conditional_logpdf(const ConditionalEstimator& est, const Vector& row,
                          int64_t kept_i, int64_t j, double y_j) {
  require(j != kept_i, ErrorKind::Domain,
          "conditional_logpdf: target equals kept component");
  require(kept_i >= 0 && kept_i < est.d && j >= 0 && j < est.d,
          ErrorKind::Domain, "conditional_logpdf: index out of range");
  CondBatch batch;
  batch.pos = {static_cast<int>(kept_i)};
  batch.val = {row[kept_i]};
  CondTrace t = cond_forward(est, batch);
  return cond_logpdf(est, t, 0, j, y_j);
}

}  // namespace symforge
