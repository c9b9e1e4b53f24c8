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

#include "symforge/estimators.hpp"
#include "symforge/trainer.hpp"
#include "test_util.hpp"

using namespace symforge;
using namespace symforge::test;

namespace {

void zero_net_weights(ConditionalEstimator& est) {
  for (Mlp* net : {&est.net_w, &est.net_mu, &est.net_sigma})
    for (Dense* l : {&net->l1, &net->l2, &net->l3}) l->w.value.zero();
}

// Simpson integration of exp(logpdf) (test-side quadrature oracle).
double integrate_marginal(const MarginalEstimator& est, int64_t i, double lo,
                          double hi, int64_t n) {
  double h = (hi - lo) / static_cast<double>(n);
  double sum = 0.0;
  for (int64_t k = 0; k <= n; ++k) {
    double x = lo + h * static_cast<double>(k);
    double f = std::exp(marginal_logpdf(est, i, x));
    double w = (k == 0 || k == n) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    sum += w * f;
  }
  return sum * h / 3.0;
}

}  // namespace

TEST_CASE("marginal logpdf closed forms") {
  MarginalEstimator est = init_marginal(2, 1);
  est.mu.value(0, 0) = 0.0;
  est.raw_sigma.value(0, 0) = std::log(1.0 - kSigmaFloor);  // sigma = 1
  CHECK(marginal_logpdf(est, 0, 0.0) ==
        doctest::Approx(-0.9189385332046727).epsilon(1e-10));

  // two far-separated equal kernels: peak minus log 2
  MarginalEstimator two = init_marginal(1, 2);
  two.mu.value(0, 0) = 0.0;
  two.mu.value(0, 1) = 1e6;
  two.raw_sigma.value(0, 0) = std::log(1.0 - kSigmaFloor);
  two.raw_sigma.value(0, 1) = std::log(1.0 - kSigmaFloor);
  CHECK(marginal_logpdf(two, 0, 0.0) ==
        doctest::Approx(-0.9189385332046727 - std::log(2.0)).epsilon(1e-9));
}

TEST_CASE("random mixtures integrate to one") {
  Rng rng(31);
  MarginalEstimator est = init_marginal(3, 4);
  for (int64_t i = 0; i < 3; ++i)
    for (int k = 0; k < 4; ++k) {
      est.logit_w.value(i, k) = rng.normal(0.0, 0.7);
      est.mu.value(i, k) = rng.normal(0.0, 1.5);
      est.raw_sigma.value(i, k) = rng.normal(0.0, 0.3);
    }
  for (int64_t i = 0; i < 3; ++i) {
    double mass = integrate_marginal(est, i, -40.0, 40.0, 40000);
    CHECK(std::fabs(mass - 1.0) < 1e-8);
  }
}

TEST_CASE("marginal logpdf gradients match finite differences") {
  Rng rng(77);
  MarginalEstimator est = init_marginal(2, 3);
  for (int64_t i = 0; i < 2; ++i)
    for (int k = 0; k < 3; ++k) {
      est.logit_w.value(i, k) = rng.normal();
      est.mu.value(i, k) = rng.normal();
      est.raw_sigma.value(i, k) = rng.normal(0.0, 0.5);
    }
  const double h = 1e-6;
  for (int rep = 0; rep < 50; ++rep) {
    double v = rng.normal(0.0, 2.0);
    double dv = 0.0;
    marginal_logpdf_grad(est, 0, v, &dv);
    double want = (marginal_logpdf(est, 0, v + h) - marginal_logpdf(est, 0, v - h)) / (2 * h);
    CHECK(rel_error(dv, want, 1e-6) < 1e-5);
  }

  // parameter gradients through marginal_entropy_accumulate
  Matrix y = random_matrix(rng, 40, 2);
  est.zero_adjoints();
  marginal_entropy_accumulate(est, 0, y, 1.0, 0.0, nullptr);
  auto fd_check = [&](DualSlot<Matrix>& block) {
    Matrix dir = random_matrix(rng, 2, 3);
    double got = frobenius_dot(block.adjoint, dir);
    axpy(h, dir, block.value);
    double up = marginal_entropy(est, 0, y);
    axpy(-2 * h, dir, block.value);
    double dn = marginal_entropy(est, 0, y);
    axpy(h, dir, block.value);
    CHECK(rel_error(got, (up - dn) / (2 * h), 1e-8) < 1e-4);
  };
  fd_check(est.logit_w);
  fd_check(est.mu);
  fd_check(est.raw_sigma);
}

TEST_CASE("fitted marginal entropy approaches the Gaussian closed form") {
  // N(0,1) data: differential entropy log sqrt(2 pi e) ~ 1.4189.
  Rng rng(5);
  const int64_t n = 10000;
  Matrix y(n, 2);
  for (int64_t r = 0; r < n; ++r) {
    y(r, 0) = rng.normal();
    y(r, 1) = rng.normal();
  }
  TrainConfig cfg;
  MarginalEstimator marg = init_marginal(2, 4);
  Rng crng(6);
  ConditionalEstimator cond = init_conditional(2, 4, 1, crng);
  Optimizers opt;
  for (int step = 0; step < 400; ++step)
    estimator_step(marg, cond, y, step % 2, 64, opt, 1e-2);
  double h0 = marginal_entropy(marg, 0, y);
  CHECK(std::fabs(h0 - 1.4189385332046727) < 0.05);

  // doubling the data scale adds log 2 after refit
  Matrix y2 = y;
  scale(y2, 2.0);
  MarginalEstimator marg2 = init_marginal(2, 4);
  Rng crng2(6);
  ConditionalEstimator cond2 = init_conditional(2, 4, 1, crng2);
  Optimizers opt2;
  for (int step = 0; step < 400; ++step)
    estimator_step(marg2, cond2, y2, step % 2, 64, opt2, 1e-2);
  double h2 = marginal_entropy(marg2, 0, y2);
  CHECK(std::fabs((h2 - h0) - std::log(2.0)) < 0.05);
}

TEST_CASE("fitted entropy of a known two-component mixture matches quadrature") {
  // 0.5 N(-2, 0.5^2) + 0.5 N(2, 1) on 10,000 samples.
  Rng rng(13);
  const int64_t n = 10000;
  Matrix y(n, 2);
  for (int64_t r = 0; r < n; ++r) {
    for (int64_t c = 0; c < 2; ++c) {
      y(r, c) = rng.uniform() < 0.5 ? rng.normal(-2.0, 0.5) : rng.normal(2.0, 1.0);
    }
  }
  // quadrature truth for the generating density
  auto pdf = [](double x) {
    auto normal = [](double v, double mu, double sd) {
      double z = (v - mu) / sd;
      return std::exp(-0.5 * z * z) / (sd * std::sqrt(2 * M_PI));
    };
    return 0.5 * normal(x, -2.0, 0.5) + 0.5 * normal(x, 2.0, 1.0);
  };
  double truth = 0.0;
  const int64_t steps = 40000;
  double lo = -12, hi = 12, h = (hi - lo) / steps;
  for (int64_t k = 0; k <= steps; ++k) {
    double x = lo + h * k;
    double f = pdf(x);
    double w = (k == 0 || k == steps) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    if (f > 0) truth += w * (-f * std::log(f));
  }
  truth *= h / 3.0;

  MarginalEstimator marg = init_marginal(2, 4);
  Rng crng(14);
  ConditionalEstimator cond = init_conditional(2, 4, 1, crng);
  Optimizers opt;
  for (int step = 0; step < 1500; ++step)
    estimator_step(marg, cond, y, step % 2, 64, opt, 1e-2);
  double fitted = marginal_entropy(marg, 0, y);
  CHECK(std::fabs(fitted - truth) < 0.05);
}

TEST_CASE("mask_batch cycles kept components") {
  auto kept = mask_batch(6, 3, 0);
  CHECK(kept == std::vector<int>{0, 1, 2, 0, 1, 2});
  auto shifted = mask_batch(6, 3, 1);
  CHECK(shifted == std::vector<int>{1, 2, 0, 1, 2, 0});
}

TEST_CASE("untrained bias-only networks give one shared mixture") {
  Rng rng(3);
  ConditionalEstimator est = init_conditional(5, 4, 1, rng);
  zero_net_weights(est);
  Vector row(5, 0.0);
  row[2] = 1.3;
  // all output slots see zero biases: four identical standard kernels
  double lp = conditional_logpdf(est, row, 2, 0, 0.0);
  CHECK(lp == doctest::Approx(-0.9189385332046727).epsilon(1e-10));
  // identical for every slot and kept position
  double lp2 = conditional_logpdf(est, row, 2, 4, 0.0);
  Vector row2(5, 0.0);
  row2[1] = -0.4;
  double lp3 = conditional_logpdf(est, row2, 1, 3, 0.0);
  CHECK(lp == doctest::Approx(lp2).epsilon(1e-12));
  CHECK(lp == doctest::Approx(lp3).epsilon(1e-12));

  CHECK_THROWS_AS(conditional_logpdf(est, row, 2, 2, 0.0), Error);
}

TEST_CASE("conditional sigma outputs stay within the tanh-scaled range") {
  Rng rng(91);
  ConditionalEstimator est = init_conditional(4, 4, 2, rng);
  // scramble weights hard
  for (Mlp* net : {&est.net_w, &est.net_mu, &est.net_sigma})
    for (Dense* l : {&net->l1, &net->l2, &net->l3})
      for (int64_t i = 0; i < l->w.value.size(); ++i)
        l->w.value.data()[i] = rng.normal(0.0, 3.0);
  CondBatch batch;
  batch.pos = {0, 1, 2, 3};
  batch.val = {10.0, -10.0, 0.5, 100.0};
  CondTrace t = cond_forward(est, batch);
  for (int64_t e = 0; e < 4; ++e)
    for (int64_t s = 0; s < 16; ++s) {
      double sigma = std::exp(est.sigma_scale * std::tanh(t.sigma.a3(e, s)));
      CHECK(sigma >= std::exp(-3.0) - 1e-12);
      CHECK(sigma <= std::exp(3.0) + 1e-12);
    }
}

TEST_CASE("conditional gradients match finite differences") {
  Rng rng(55);
  const int64_t d = 5;
  const int m = 2;
  ConditionalEstimator est = init_conditional(d, m, 1, rng);
  CondBatch batch;
  batch.pos = {1, 3, 0};
  batch.val = {0.7, -1.2, 0.4};
  const int64_t e_count = 3;

  // random linear functional over all valid (e, j) log-densities
  Matrix coef = random_matrix(rng, e_count, d);
  Matrix targets = random_matrix(rng, e_count, d);
  auto loss = [&]() {
    CondTrace t = cond_forward(est, batch);
    double s = 0.0;
    for (int64_t e = 0; e < e_count; ++e)
      for (int64_t j = 0; j < d; ++j) {
        if (j == batch.pos[e]) continue;
        s += coef(e, j) * cond_logpdf(est, t, e, j, targets(e, j));
      }
    return s;
  };

  est.zero_adjoints();
  CondTrace t = cond_forward(est, batch);
  Matrix da3_w(e_count, d * m), da3_mu(e_count, d * m), da3_sigma(e_count, d * m);
  Vector dval(e_count, 0.0);
  Matrix dy_dummy(e_count, d);
  for (int64_t e = 0; e < e_count; ++e)
    for (int64_t j = 0; j < d; ++j) {
      if (j == batch.pos[e]) continue;
      double dy = 0.0;
      cond_logpdf_grad(est, t, e, j, targets(e, j), coef(e, j), &da3_w, &da3_mu,
                       &da3_sigma, &dy);
      dy_dummy(e, j) += dy;
    }
  cond_backward(est, batch, t, da3_w, da3_mu, da3_sigma, /*to_weights=*/true,
                &dval);

  const double h = 1e-6;
  // weight gradients, one random direction per layer per net
  for (Mlp* net : {&est.net_w, &est.net_mu, &est.net_sigma}) {
    for (Dense* l : {&net->l1, &net->l2, &net->l3}) {
      Matrix dir = random_matrix(rng, l->w.value.rows(), l->w.value.cols());
      double got = frobenius_dot(l->w.adjoint, dir);
      axpy(h, dir, l->w.value);
      double up = loss();
      axpy(-2 * h, dir, l->w.value);
      double dn = loss();
      axpy(h, dir, l->w.value);
      CHECK(rel_error(got, (up - dn) / (2 * h), 1e-7) < 1e-4);

      Vector bdir = random_vector(rng, l->b.value.size());
      double got_b = dot(l->b.adjoint, bdir);
      axpy(h, bdir, l->b.value);
      up = loss();
      axpy(-2 * h, bdir, l->b.value);
      dn = loss();
      axpy(h, bdir, l->b.value);
      CHECK(rel_error(got_b, (up - dn) / (2 * h), 1e-7) < 1e-4);
    }
  }
  // input-value gradients
  for (int64_t e = 0; e < e_count; ++e) {
    batch.val[e] += h;
    double up = loss();
    batch.val[e] -= 2 * h;
    double dn = loss();
    batch.val[e] += h;
    CHECK(rel_error(dval[e], (up - dn) / (2 * h), 1e-7) < 1e-4);
  }
  // evaluation-point gradients
  for (int64_t e = 0; e < e_count; ++e)
    for (int64_t j = 0; j < d; ++j) {
      if (j == batch.pos[e]) continue;
      CondTrace tt = cond_forward(est, batch);
      double up = cond_logpdf(est, tt, e, j, targets(e, j) + h);
      double dn = cond_logpdf(est, tt, e, j, targets(e, j) - h);
      double want = coef(e, j) * (up - dn) / (2 * h);
      CHECK(rel_error(dy_dummy(e, j), want, 1e-7) < 1e-4);
    }
}

TEST_CASE("estimator training reduces NLL and keeps simplex weights") {
  Rng rng(1);
  const int64_t n = 512, d = 4;
  Matrix y(n, d);
  for (int64_t r = 0; r < n; ++r) {
    double base = rng.normal();
    for (int64_t c = 0; c < d; ++c) y(r, c) = 0.8 * base + 0.6 * rng.normal();
  }
  MarginalEstimator marg = init_marginal(d, 4);
  Rng crng(2);
  ConditionalEstimator cond = init_conditional(d, 4, 2, crng);
  Optimizers opt;

  Vector marg_curve, cond_curve;
  for (int step = 0; step < 200; ++step) {
    auto [mnll, cnll] = estimator_step(marg, cond, y, step % d, n, opt, 1e-2);
    marg_curve.push_back(mnll);
    cond_curve.push_back(cnll);
  }
  auto avg = [](const Vector& v, size_t lo, size_t hi) {
    double s = 0.0;
    for (size_t i = lo; i < hi; ++i) s += v[i];
    return s / static_cast<double>(hi - lo);
  };
  CHECK(avg(marg_curve, 180, 200) < avg(marg_curve, 0, 20));
  CHECK(avg(cond_curve, 180, 200) < avg(cond_curve, 0, 20));

  // weights stay on the simplex by construction: softmax of finite logits
  for (int64_t i = 0; i < d; ++i) {
    double sum = 0.0, mx = -1e300;
    for (int k = 0; k < 4; ++k) mx = std::max(mx, marg.logit_w.value(i, k));
    for (int k = 0; k < 4; ++k) sum += std::exp(marg.logit_w.value(i, k) - mx);
    CHECK(std::isfinite(sum));
    CHECK(sum > 0.0);
  }

  // correlated conditional beats the marginal on held-in data
  double gain = 0.0;
  int count = 0;
  for (int64_t r = 0; r < 64; ++r) {
    Vector row(y.row(r), y.row(r) + d);
    for (int64_t j = 0; j < d; ++j) {
      if (j == 0) continue;
      gain += conditional_logpdf(cond, row, 0, j, y(r, j)) -
              marginal_logpdf(marg, j, y(r, j));
      ++count;
    }
  }
  CHECK(gain / count > 0.1);  // strong correlation: conditioning helps
}
