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

#include "symforge/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace symforge {

namespace {

constexpr double kVarianceFloor = 1e-12;

struct ColumnStats {
  Vector mean, var, sd;  // var floored, sd = sqrt(var)
  std::vector<bool> floored;
};

ColumnStats column_stats(const Matrix& y) {
  const int64_t n = y.rows(), d = y.cols();
  ColumnStats st;
  st.mean.assign(d, 0.0);
  st.var.assign(d, 0.0);
  st.sd.assign(d, 0.0);
  st.floored.assign(d, false);
  for (int64_t r = 0; r < n; ++r) {
    const double* row = y.row(r);
    for (int64_t j = 0; j < d; ++j) st.mean[j] += row[j];
  }
  for (int64_t j = 0; j < d; ++j) st.mean[j] /= static_cast<double>(n);
  for (int64_t r = 0; r < n; ++r) {
    const double* row = y.row(r);
    for (int64_t j = 0; j < d; ++j) {
      double c = row[j] - st.mean[j];
      st.var[j] += c * c;
    }
  }
  for (int64_t j = 0; j < d; ++j) {
    st.var[j] /= static_cast<double>(n);
    if (st.var[j] < kVarianceFloor) {
      st.var[j] = kVarianceFloor;
      st.floored[j] = true;
    }
    st.sd[j] = std::sqrt(st.var[j]);
  }
  return st;
}

}  // namespace

double alignment_loss(const Matrix& y) { return alignment_loss_grad(y, 0.0, nullptr); }

double alignment_loss_grad(const Matrix& y, double coef, Matrix* dy) {
  const int64_t n = y.rows(), d = y.cols();
  require(n >= 2, ErrorKind::Config, "alignment_loss: need at least two rows");
  require(d >= 2, ErrorKind::Config, "alignment_loss: need at least two columns");
  ColumnStats st = column_stats(y);

  Vector cov(d - 1, 0.0);
  for (int64_t r = 0; r < n; ++r) {
    const double* row = y.row(r);
    for (int64_t i = 0; i + 1 < d; ++i)
      cov[i] += (row[i] - st.mean[i]) * (row[i + 1] - st.mean[i + 1]);
  }
  Vector rho(d - 1);
  double sum = 0.0;
  for (int64_t i = 0; i + 1 < d; ++i) {
    cov[i] /= static_cast<double>(n);
    rho[i] = cov[i] / (st.sd[i] * st.sd[i + 1]);
    sum += rho[i];
  }
  const double pairs = static_cast<double>(d - 1);
  double loss = -sum / pairs;

  if (dy && coef != 0.0) {
    // d(loss)/d(rho_i) = -coef / (d - 1); the correlation gradient for the
    // pair (a, b) at row r is
    //   [(b_r - mu_b) - rho (sd_b / sd_a)(a_r - mu_a)] / (n sd_a sd_b)
    // with the variance term dropped when the floor is active.
    const double w = -coef / pairs / static_cast<double>(n);
    for (int64_t r = 0; r < n; ++r) {
      const double* row = y.row(r);
      double* out = dy->row(r);
      for (int64_t i = 0; i + 1 < d; ++i) {
        double ca = row[i] - st.mean[i];
        double cb = row[i + 1] - st.mean[i + 1];
        double inv = 1.0 / (st.sd[i] * st.sd[i + 1]);
        double da = cb * inv;
        double db = ca * inv;
        if (!st.floored[i]) da -= rho[i] * ca / st.var[i];
        if (!st.floored[i + 1]) db -= rho[i] * cb / st.var[i + 1];
        out[i] += w * da;
        out[i + 1] += w * db;
      }
    }
  }
  return loss;
}

double kl_shift_proxy(const MarginalEstimator& marg,
                      const ConditionalEstimator& cond, const Matrix& y,
                      int64_t i, int64_t j, int64_t di, int64_t dj) {
  const int64_t d = y.cols();
  require(i != j, ErrorKind::Domain, "kl_shift_proxy: i == j");
  require(i >= 0 && i < d && j >= 0 && j < d, ErrorKind::Domain,
          "kl_shift_proxy: pair out of range");
  require(i + di >= 0 && i + di < d && j + dj >= 0 && j + dj < d,
          ErrorKind::Domain, "kl_shift_proxy: shifted pair out of range");
  require(i + di != j + dj, ErrorKind::Domain,
          "kl_shift_proxy: shifted pair collapses");

  const int64_t n = y.rows();
  CondBatch batch;
  batch.pos.reserve(2 * n);
  batch.val.reserve(2 * n);
  for (int64_t r = 0; r < n; ++r) {
    double v = y(r, i);
    batch.pos.push_back(static_cast<int>(i));
    batch.val.push_back(v);
    batch.pos.push_back(static_cast<int>(i + di));
    batch.val.push_back(v);
  }
  CondTrace trace = cond_forward(cond, batch);
  double sum = 0.0;
  for (int64_t r = 0; r < n; ++r) {
    double v = y(r, i);
    double lp_i = marginal_logpdf(marg, i, v);
    double lp_k = marginal_logpdf(marg, i + di, v);
    double lp_ji = cond_logpdf(cond, trace, 2 * r, j, y(r, j));
    double lp_lk = cond_logpdf(cond, trace, 2 * r + 1, j + dj, y(r, j));
    sum += (lp_i + lp_ji) - (lp_k + lp_lk);
  }
  return sum / static_cast<double>(n);
}

UniformityPlan full_uniformity_plan(int64_t rows, int64_t d) {
  UniformityPlan plan;
  plan.rows.resize(rows);
  std::iota(plan.rows.begin(), plan.rows.end(), 0);
  plan.minus.shift = -1;
  plan.plus.shift = +1;
  for (int i = 1; i < d; ++i) {
    plan.minus.positions.push_back(i);
    std::vector<int> js;
    for (int j = 1; j < d; ++j)
      if (j != i) js.push_back(j);
    plan.minus.targets.push_back(std::move(js));
  }
  for (int i = 0; i + 1 < d; ++i) {
    plan.plus.positions.push_back(i);
    std::vector<int> js;
    for (int j = 0; j + 1 < d; ++j)
      if (j != i) js.push_back(j);
    plan.plus.targets.push_back(std::move(js));
  }
  return plan;
}

UniformityPlan sample_uniformity_plan(Rng& rng, int64_t n_rows, int64_t d,
                                      int64_t row_count, int positions_per_dir,
                                      int pairs_per_dir) {
  require(d >= 3, ErrorKind::Config, "uniformity: d must be >= 3");
  UniformityPlan plan;
  row_count = std::min<int64_t>(row_count, n_rows);
  // Partial Fisher-Yates over row indices.
  std::vector<int64_t> all(n_rows);
  std::iota(all.begin(), all.end(), 0);
  for (int64_t i = 0; i < row_count; ++i) {
    int64_t j = i + static_cast<int64_t>(rng.below(static_cast<uint64_t>(n_rows - i)));
    std::swap(all[i], all[j]);
    plan.rows.push_back(all[i]);
  }

  auto fill_direction = [&](UniformityPlan::Direction& dir, int shift, int lo,
                            int hi) {
    dir.shift = shift;
    std::vector<int> is;
    for (int i = lo; i <= hi; ++i) is.push_back(i);
    rng.shuffle(is);
    int n_pos = std::min<int>(positions_per_dir, static_cast<int>(is.size()));
    int per_pos = std::max(1, pairs_per_dir / std::max(1, n_pos));
    for (int a = 0; a < n_pos; ++a) {
      int i = is[a];
      std::vector<int> js;
      for (int j = lo; j <= hi; ++j)
        if (j != i) js.push_back(j);
      rng.shuffle(js);
      if (static_cast<int>(js.size()) > per_pos) js.resize(per_pos);
      dir.positions.push_back(i);
      dir.targets.push_back(std::move(js));
    }
  };
  fill_direction(plan.minus, -1, 1, static_cast<int>(d) - 1);
  fill_direction(plan.plus, +1, 0, static_cast<int>(d) - 2);
  return plan;
}

double uniformity_loss(const MarginalEstimator& marg,
                       const ConditionalEstimator& cond, const Matrix& y,
                       const UniformityPlan& plan, double coef, Matrix* dy) {
  const int64_t r_count = static_cast<int64_t>(plan.rows.size());
  if (r_count == 0) return 0.0;

  // Combined masked-eval batch across both directions; entries come in
  // (original, shifted) pairs whose input value is y(row, i) in both.
  CondBatch batch;
  std::vector<int64_t> eval_row;
  std::vector<int> eval_i;
  auto push_direction = [&](const UniformityPlan::Direction& dir) {
    for (size_t a = 0; a < dir.positions.size(); ++a) {
      int i = dir.positions[a];
      for (int64_t rr = 0; rr < r_count; ++rr) {
        double v = y(plan.rows[rr], i);
        batch.pos.push_back(i);
        batch.val.push_back(v);
        batch.pos.push_back(i + dir.shift);
        batch.val.push_back(v);
        eval_row.push_back(plan.rows[rr]);
        eval_row.push_back(plan.rows[rr]);
        eval_i.push_back(i);
        eval_i.push_back(i);
      }
    }
  };
  push_direction(plan.minus);
  push_direction(plan.plus);
  if (batch.pos.empty()) return 0.0;

  CondTrace trace = cond_forward(cond, batch);
  const bool want_grad = dy != nullptr && coef != 0.0;
  const int64_t e_total = batch.size();
  const int64_t out = cond.d * cond.kernels;
  Matrix da3_w(want_grad ? e_total : 0, want_grad ? out : 0);
  Matrix da3_mu = da3_w, da3_sigma = da3_w;

  double value = 0.0;
  int64_t base = 0;
  for (const UniformityPlan::Direction* dir : {&plan.minus, &plan.plus}) {
    int64_t pair_count = 0;
    for (const auto& js : dir->targets) pair_count += static_cast<int64_t>(js.size());
    if (pair_count == 0) continue;
    const double w_pair = 1.0 / static_cast<double>(r_count * pair_count);

    for (size_t a = 0; a < dir->positions.size(); ++a) {
      const int i = dir->positions[a];
      const int k = i + dir->shift;
      const auto& js = dir->targets[a];
      const double w_marg = w_pair * static_cast<double>(js.size());
      for (int64_t rr = 0; rr < r_count; ++rr) {
        const int64_t row = plan.rows[rr];
        const double v = y(row, i);
        const int64_t e_orig = base + (static_cast<int64_t>(a) * r_count + rr) * 2;
        const int64_t e_shift = e_orig + 1;

        double dvi = 0.0, dvk = 0.0;
        double lp_i = marginal_logpdf_grad(marg, i, v, want_grad ? &dvi : nullptr);
        double lp_k = marginal_logpdf_grad(marg, k, v, want_grad ? &dvk : nullptr);
        value += w_marg * (lp_i - lp_k);
        if (want_grad) (*dy)(row, i) += coef * w_marg * (dvi - dvk);

        for (int j : js) {
          double dyj = 0.0;
          double lp_orig = cond_logpdf_grad(
              cond, trace, e_orig, j, y(row, j), want_grad ? coef * w_pair : 0.0,
              want_grad ? &da3_w : nullptr, want_grad ? &da3_mu : nullptr,
              want_grad ? &da3_sigma : nullptr, want_grad ? &dyj : nullptr);
          double lp_shift = cond_logpdf_grad(
              cond, trace, e_shift, j + dir->shift, y(row, j),
              want_grad ? -coef * w_pair : 0.0, want_grad ? &da3_w : nullptr,
              want_grad ? &da3_mu : nullptr, want_grad ? &da3_sigma : nullptr,
              want_grad ? &dyj : nullptr);
          value += w_pair * (lp_orig - lp_shift);
          if (want_grad) (*dy)(row, j) += dyj;
        }
      }
    }
    base += static_cast<int64_t>(dir->positions.size()) * r_count * 2;
  }

  if (want_grad) {
    // Estimator parameters are frozen here; the backward call only produces
    // input-value gradients, so the const_cast cannot mutate the estimator.
    Vector dval(e_total, 0.0);
    cond_backward(const_cast<ConditionalEstimator&>(cond), batch, trace, da3_w,
                  da3_mu, da3_sigma, /*to_weights=*/false, &dval);
    for (int64_t e = 0; e < e_total; ++e)
      (*dy)(eval_row[e], eval_i[e]) += dval[e];
  }
  return value;
}

double uniformity_loss_full(const MarginalEstimator& marg,
                            const ConditionalEstimator& cond, const Matrix& y) {
  UniformityPlan plan = full_uniformity_plan(y.rows(), y.cols());
  return uniformity_loss(marg, cond, y, plan, 0.0, nullptr);
}

LossBreakdown total_loss(double alignment, double resolution, double uniformity,
                         double preservation, const LossWeights& w) {
  auto check = [](double v, const char* name) {
    if (!std::isfinite(v)) {
      std::ostringstream msg;
      msg << "total_loss: non-finite " << name << " term (" << v << ")";
      fail(ErrorKind::Numeric, msg.str());
    }
  };
  check(alignment, "alignment");
  check(resolution, "resolution");
  check(uniformity, "uniformity");
  check(preservation, "preservation");
  LossBreakdown b;
  b.alignment = alignment;
  b.resolution = resolution;
  b.uniformity = uniformity;
  b.preservation = preservation;
  b.total = w.alignment * alignment + w.resolution * resolution +
            w.uniformity * uniformity + w.preservation * preservation;
  check(b.total, "total");
  return b;
}

}  // namespace symforge
