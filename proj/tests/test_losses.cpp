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

#include "symforge/entropy.hpp"
#include "symforge/losses.hpp"
#include "symforge/trainer.hpp"
#include "test_util.hpp"

using namespace symforge;
using namespace symforge::test;

namespace {

void zero_net_weights(ConditionalEstimator& est) {
  for (Mlp* net : {&est.net_w, &est.net_mu, &est.net_sigma})
    for (Dense* l : {&net->l1, &net->l2, &net->l3}) l->w.value.zero();
}

// Marginal estimator whose rows all share one standard-normal kernel set.
MarginalEstimator shared_marginal(int64_t d, int m) {
  MarginalEstimator est = init_marginal(d, m);
  for (int64_t i = 0; i < d; ++i)
    for (int k = 0; k < m; ++k) {
      est.logit_w.value(i, k) = 0.0;
      est.mu.value(i, k) = 0.0;
      est.raw_sigma.value(i, k) = std::log(1.0 - kSigmaFloor);
    }
  return est;
}

ConditionalEstimator random_conditional(int64_t d, int m, uint64_t seed) {
  Rng rng(seed);
  return init_conditional(d, m, 1, rng);
}

}  // namespace

TEST_CASE("alignment loss closed forms") {
  Rng rng(2);
  const int64_t n = 64, d = 4;
  Matrix same(n, d);
  for (int64_t r = 0; r < n; ++r) {
    double v = rng.normal();
    for (int64_t c = 0; c < d; ++c) same(r, c) = v;
  }
  CHECK(alignment_loss(same) == doctest::Approx(-1.0).epsilon(1e-12));

  Matrix anti(n, 2);
  for (int64_t r = 0; r < n; ++r) {
    double v = rng.normal();
    anti(r, 0) = v;
    anti(r, 1) = -v;
  }
  CHECK(alignment_loss(anti) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("alignment of independent columns is near zero and always within [-1, 1]") {
  Rng rng(5);
  Matrix y = random_matrix(rng, 10000, 6);
  CHECK(std::fabs(alignment_loss(y)) < 0.05);
  for (uint64_t seed = 0; seed < 20; ++seed) {
    Rng r2(100 + seed);
    Matrix z = random_matrix(r2, 32, 5);
    double v = alignment_loss(z);
    CHECK(v >= -1.0 - 1e-12);
    CHECK(v <= 1.0 + 1e-12);
  }
}

TEST_CASE("alignment gradient matches finite differences") {
  Rng rng(7);
  const double h = 1e-6;
  for (int rep = 0; rep < 20; ++rep) {
    Matrix y = random_matrix(rng, 24, 5);
    Matrix dy(24, 5);
    alignment_loss_grad(y, 1.0, &dy);
    Matrix dir = random_matrix(rng, 24, 5);
    double got = frobenius_dot(dy, dir);
    Matrix yp = y, ym = y;
    axpy(h, dir, yp);
    axpy(-h, dir, ym);
    double want = (alignment_loss(yp) - alignment_loss(ym)) / (2 * h);
    CHECK(rel_error(got, want, 1e-8) < 1e-5);
  }
}

TEST_CASE("kl shift proxy is exactly zero for shared estimators") {
  const int64_t d = 5;
  MarginalEstimator marg = shared_marginal(d, 3);
  ConditionalEstimator cond = random_conditional(d, 3, 1);
  zero_net_weights(cond);
  Rng rng(3);
  Matrix y = random_matrix(rng, 32, d);
  CHECK(kl_shift_proxy(marg, cond, y, 1, 3, 1, 1) == doctest::Approx(0.0));
  CHECK(kl_shift_proxy(marg, cond, y, 2, 3, -1, -1) == doctest::Approx(0.0));

  CHECK_THROWS_AS(kl_shift_proxy(marg, cond, y, 2, 2, 1, 1), Error);
  CHECK_THROWS_AS(kl_shift_proxy(marg, cond, y, 0, 3, -1, -1), Error);
}

TEST_CASE("kl shift proxy recovers the Gaussian closed form") {
  // Component 0 ~ N(0,1), component 1 modeled as N(10,1); conditionals are
  // shared so only the marginal shift contributes: KL = 10^2/2 = 50.
  const int64_t d = 4;
  MarginalEstimator marg = shared_marginal(d, 2);
  for (int k = 0; k < 2; ++k) marg.mu.value(1, k) = 10.0;
  ConditionalEstimator cond = random_conditional(d, 2, 2);
  zero_net_weights(cond);

  Rng rng(11);
  const int64_t n = 4000;
  Matrix y(n, d);
  for (int64_t r = 0; r < n; ++r)
    for (int64_t c = 0; c < d; ++c) y(r, c) = rng.normal();

  double got = kl_shift_proxy(marg, cond, y, 0, 2, 1, 1);
  CHECK(got == doctest::Approx(50.0).epsilon(0.03));
}

TEST_CASE("uniformity is exactly zero for tiled columns with shared estimators") {
  const int64_t d = 6, n = 40;
  MarginalEstimator marg = shared_marginal(d, 4);
  ConditionalEstimator cond = random_conditional(d, 4, 5);
  zero_net_weights(cond);
  Rng rng(9);
  Matrix y(n, d);
  for (int64_t r = 0; r < n; ++r) {
    double v = rng.normal();
    for (int64_t c = 0; c < d; ++c) y(r, c) = v;  // tile one column
  }
  CHECK(uniformity_loss_full(marg, cond, y) == doctest::Approx(0.0));
}

TEST_CASE("one anomalous column makes uniformity strictly positive") {
  const int64_t d = 6, n = 512;
  MarginalEstimator marg = shared_marginal(d, 4);
  // make column 3's marginal model distinct (mean shifted)
  for (int k = 0; k < 4; ++k) marg.mu.value(3, k) = 2.0;
  ConditionalEstimator cond = random_conditional(d, 4, 6);
  zero_net_weights(cond);
  Rng rng(10);
  Matrix y(n, d);
  for (int64_t r = 0; r < n; ++r)
    for (int64_t c = 0; c < d; ++c) y(r, c) = rng.normal(c == 3 ? 2.0 : 0.0, 1.0);
  CHECK(uniformity_loss_full(marg, cond, y) > 0.5);
}

TEST_CASE("subsampled uniformity agrees with the full average over batches") {
  const int64_t d = 7, n = 64;
  MarginalEstimator marg = shared_marginal(d, 3);
  ConditionalEstimator cond = random_conditional(d, 3, 12);  // random nets

  Rng plan_rng(77);
  const int batches = 50;
  Vector diffs;
  for (int b = 0; b < batches; ++b) {
    Rng rng(1000 + b);
    Matrix y = random_matrix(rng, n, d);
    double full = uniformity_loss_full(marg, cond, y);
    // ~25% of pairs: 3 of 6 positions, 8 pairs per direction
    UniformityPlan plan = sample_uniformity_plan(plan_rng, n, d, n, 3, 8);
    double sub = uniformity_loss(marg, cond, y, plan, 0.0, nullptr);
    diffs.push_back(sub - full);
  }
  double mean = 0.0, var = 0.0;
  for (double v : diffs) mean += v;
  mean /= batches;
  for (double v : diffs) var += (v - mean) * (v - mean);
  var /= (batches - 1);
  double se = std::sqrt(var / batches);
  CHECK(std::fabs(mean) < 2.0 * se + 1e-12);
}

TEST_CASE("uniformity gradient matches finite differences") {
  const int64_t d = 5, n = 12;
  MarginalEstimator marg = shared_marginal(d, 2);
  // perturb marginals so gradients are nontrivial
  Rng mr(31);
  for (int64_t i = 0; i < d; ++i)
    for (int k = 0; k < 2; ++k) {
      marg.mu.value(i, k) += mr.normal(0.0, 0.3);
      marg.logit_w.value(i, k) += mr.normal(0.0, 0.2);
    }
  ConditionalEstimator cond = random_conditional(d, 2, 13);

  Rng rng(17);
  Matrix y = random_matrix(rng, n, d);
  Rng plan_rng(5);
  UniformityPlan plan = sample_uniformity_plan(plan_rng, n, d, n, 2, 6);

  Matrix dy(n, d);
  uniformity_loss(marg, cond, y, plan, 1.0, &dy);

  const double h = 1e-6;
  for (int rep = 0; rep < 10; ++rep) {
    Matrix dir = random_matrix(rng, n, d);
    double got = frobenius_dot(dy, dir);
    Matrix yp = y, ym = y;
    axpy(h, dir, yp);
    axpy(-h, dir, ym);
    double up = uniformity_loss(marg, cond, yp, plan, 0.0, nullptr);
    double dn = uniformity_loss(marg, cond, ym, plan, 0.0, nullptr);
    CHECK(rel_error(got, (up - dn) / (2 * h), 1e-8) < 1e-4);
  }
}

TEST_CASE("preservation loss closed forms") {
  CHECK(preservation_loss(lowrank_entropy(Matrix::identity(4), 4, 5.0).h_bar) ==
        doctest::Approx(0.0));
  // collapsing map: clamped eigenvalues, -log(1e-10) = +23.03
  Matrix zero(4, 4);
  CHECK(preservation_loss(lowrank_entropy(zero, 4, 5.0).h_bar) ==
        doctest::Approx(-std::log(1e-10)).epsilon(1e-9));

  // doubling Y scales C by 4: h_bar rises by log 4 at any fixed k
  Rng rng(3);
  Matrix y = random_matrix(rng, 50, 4);
  Matrix c = batch_covariance(y);
  Matrix c4 = c;
  scale(c4, 4.0);
  double h1 = lowrank_entropy(c, 4, 5.0).h_bar;
  double h4 = lowrank_entropy(c4, 4, 5.0).h_bar;
  CHECK(h4 - h1 == doctest::Approx(std::log(4.0)).epsilon(1e-9));
}

TEST_CASE("resolution of independent standardized Gaussians is the marginal entropy") {
  Rng rng(23);
  const int64_t n = 10000, d = 4;
  Matrix y(n, d);
  for (int64_t i = 0; i < y.size(); ++i) y.data()[i] = rng.normal();

  MarginalEstimator marg = init_marginal(d, 4);
  Rng crng(24);
  ConditionalEstimator cond = init_conditional(d, 4, 1, crng);
  Optimizers opt;
  for (int step = 0; step < 500; ++step)
    estimator_step(marg, cond, y, step % d, 64, opt, 1e-2);

  double mean_marginal = 0.0;
  for (int64_t i = 0; i < d; ++i) mean_marginal += marginal_entropy(marg, i, y);
  mean_marginal /= d;
  double h_bar = lowrank_entropy(batch_covariance(y), d, 5.0).h_bar;
  double resolution = resolution_loss(mean_marginal, h_bar);
  CHECK(std::fabs(resolution - 1.4189385332046727) < 0.08);
}

TEST_CASE("total loss weighting and NaN rejection") {
  LossWeights w;
  LossBreakdown b = total_loss(-1.0, 0.0, 0.0, 0.0, w);
  CHECK(b.total == doctest::Approx(-1.5));
  CHECK(total_loss(0, 0, 0, 0, w).total == 0.0);

  LossWeights zeroed;
  zeroed.alignment = 0.0;
  zeroed.resolution = 0.0;
  zeroed.uniformity = 0.0;
  zeroed.preservation = 1.0;
  CHECK(total_loss(5.0, 5.0, 5.0, 2.0, zeroed).total == doctest::Approx(2.0));

  bool named = false;
  try {
    total_loss(0.0, std::nan(""), 0.0, 0.0, w);
  } catch (const Error& e) {
    named = std::string(e.what()).find("resolution") != std::string::npos;
  }
  CHECK(named);
}

TEST_CASE("end-to-end loss gradient w.r.t. A and psi0 matches finite differences") {
  const int64_t d = 7, pad = 2;
  const double h = 1e-5;
  Rng data_rng(40);
  Matrix xb = random_matrix(data_rng, 16, d);

  MarginalEstimator marg = shared_marginal(d, 2);
  Rng mr(41);
  for (int64_t i = 0; i < d; ++i)
    for (int k = 0; k < 2; ++k) marg.mu.value(i, k) += mr.normal(0.0, 0.2);
  ConditionalEstimator cond = random_conditional(d, 2, 42);
  LossWeights w;

  int passes = 0;
  for (uint64_t seed = 0; seed < 200 && passes < 50; ++seed) {
    Rng rng(500 + seed);
    SymmetryModel model = init_model(d, pad, rng);
    for (int64_t i = 0; i < model.a.value.size(); ++i)
      model.a.value.data()[i] = rng.normal(0.0, 0.3);
    model.psi0.value = random_vector(rng, model.dim, 0.4);
    Vector noise = random_vector(rng, model.dim, 0.02);
    Rng plan_rng(600 + seed);
    UniformityPlan plan = sample_uniformity_plan(plan_rng, 16, d, 8, 2, 6);
    const int64_t k = 1 + static_cast<int64_t>(seed % d);

    auto value = [&](SymmetryModel& m) {
      ModelLossResult r = evaluate_model_loss(m, marg, cond, xb, noise, k, 1e-8,
                                              5.0, w, plan, false);
      return w.alignment * r.alignment + w.resolution * r.resolution +
             w.uniformity * r.uniformity + w.preservation * r.preservation;
    };

    model.zero_adjoints();
    ModelLossResult base = evaluate_model_loss(model, marg, cond, xb, noise, k,
                                               1e-8, 5.0, w, plan, true);
    // The rank weights follow the eigenvalue sort order, so finite
    // differences are unusable when neighboring eigenvalues nearly cross;
    // skip those seeds (same exclusion as the eigenvalue-gradient property).
    bool near_crossing = false;
    for (size_t i = 0; i + 1 < base.spectrum.size(); ++i) {
      double a = base.spectrum[i], bvl = base.spectrum[i + 1];
      if (a - bvl < 0.05 * (a + bvl)) near_crossing = true;
    }
    if (near_crossing) continue;

    Matrix da = random_matrix(rng, model.dim, model.dim);
    double got_a = frobenius_dot(model.a.adjoint, da);
    SymmetryModel mp = model, mm = model;
    axpy(h, da, mp.a.value);
    axpy(-h, da, mm.a.value);
    double want_a = (value(mp) - value(mm)) / (2 * h);
    CHECK(rel_error(got_a, want_a, 1e-5) < 1e-3);

    Vector dpsi = random_vector(rng, model.dim);
    double got_p = dot(model.psi0.adjoint, dpsi);
    SymmetryModel pp = model, pm = model;
    axpy(h, dpsi, pp.psi0.value);
    axpy(-h, dpsi, pm.psi0.value);
    double want_p = (value(pp) - value(pm)) / (2 * h);
    CHECK(rel_error(got_p, want_p, 1e-5) < 1e-3);
    ++passes;
  }
  CHECK(passes == 50);
}
