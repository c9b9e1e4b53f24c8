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

#include "symforge/trainer.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "symforge/entropy.hpp"
#include "symforge/linalg.hpp"

namespace symforge {

namespace {

constexpr uint64_t kStreamModelInit = 0x6d6f64656cull;
constexpr uint64_t kStreamEstimatorInit = 0x657374ull;
constexpr uint64_t kStreamNoise = 0x6e6f697365ull;
constexpr uint64_t kStreamPlan = 0x706c616eull;
constexpr uint64_t kStreamShuffle = 0x73687566ull;
constexpr uint64_t kStreamSnapshot = 0x736e6170ull;

Vector build_lr_schedule(const TrainConfig& cfg, int64_t total) {
  Vector lr(total, cfg.lr_model);
  if (cfg.lr_schedule == LrScheduleKind::LinearDecay) {
    for (int64_t s = 0; s < total; ++s) {
      double frac = total > 1 ? static_cast<double>(s) / (total - 1) : 0.0;
      lr[s] = cfg.lr_model * (1.0 - 0.9 * frac);  // decays to 10%
    }
  }
  return lr;
}

}  // namespace

std::pair<double, double> estimator_step(MarginalEstimator& marg,
                                         ConditionalEstimator& cond,
                                         const Matrix& y, int64_t mask_offset,
                                         int64_t cond_rows, Optimizers& opt,
                                         double lr) {
  const int64_t n = y.rows(), d = y.cols();
  marg.zero_adjoints();
  cond.zero_adjoints();

  double marg_nll = 0.0;
  for (int64_t i = 0; i < d; ++i)
    marg_nll += marginal_entropy_accumulate(marg, i, y, 1.0, 0.0, nullptr);
  marg_nll /= static_cast<double>(d);

  const int64_t rows = std::min<int64_t>(cond_rows, n);
  std::vector<int> kept = mask_batch(rows, d, mask_offset);
  CondBatch batch;
  batch.pos.resize(rows);
  batch.val.resize(rows);
  for (int64_t r = 0; r < rows; ++r) {
    batch.pos[r] = kept[r];
    batch.val[r] = y(r, kept[r]);
  }
  CondTrace trace = cond_forward(cond, batch);

  const int64_t out = d * cond.kernels;
  Matrix da3_w(rows, out), da3_mu(rows, out), da3_sigma(rows, out);
  const double coef = -1.0 / static_cast<double>(rows * (d - 1));
  double cond_nll = 0.0;
  for (int64_t r = 0; r < rows; ++r) {
    for (int64_t j = 0; j < d; ++j) {
      if (j == kept[r]) continue;
      double lp = cond_logpdf_grad(cond, trace, r, j, y(r, j), coef, &da3_w,
                                   &da3_mu, &da3_sigma, nullptr);
      cond_nll -= lp;
    }
  }
  cond_nll /= static_cast<double>(rows * (d - 1));
  cond_backward(cond, batch, trace, da3_w, da3_mu, da3_sigma,
                /*to_weights=*/true, nullptr);

  adam_step(opt.marg_logit, marg.logit_w, lr);
  adam_step(opt.marg_mu, marg.mu, lr);
  adam_step(opt.marg_sigma, marg.raw_sigma, lr);
  Mlp* nets[3] = {&cond.net_w, &cond.net_mu, &cond.net_sigma};
  for (int nn = 0; nn < 3; ++nn) {
    Dense* layers[3] = {&nets[nn]->l1, &nets[nn]->l2, &nets[nn]->l3};
    for (int ll = 0; ll < 3; ++ll) {
      adam_step(opt.cond[nn][ll][0], layers[ll]->w, lr);
      adam_step(opt.cond[nn][ll][1], layers[ll]->b, lr);
    }
  }
  return {marg_nll, cond_nll};
}

Trainer Trainer::create(const TrainConfig& config, const Dataset& data) {
  require(config.steps >= 1, ErrorKind::Config, "train: steps must be >= 1");
  require(config.batch_size >= 2, ErrorKind::Config,
          "train: batch size must be >= 2");
  require(config.batch_size <= data.x.rows(), ErrorKind::Config,
          "train: batch size exceeds dataset size");

  Trainer t;
  t.config = config;
  t.data = &data;
  const int64_t d = data.x.cols();
  const int64_t batches_per_pass = data.x.rows() / config.batch_size;
  t.total_steps = config.epochs_are_passes
                      ? config.steps * std::max<int64_t>(1, batches_per_pass)
                      : config.steps;

  Rng root(config.seed);
  Rng init_rng = root.fork(kStreamModelInit);
  t.model = init_model(d, config.pad, init_rng);
  Rng est_rng = root.fork(kStreamEstimatorInit);
  t.marginal = init_marginal(d, config.estimators.kernels);
  t.conditional = init_conditional(d, config.estimators.kernels,
                                   config.estimators.hidden_multiple, est_rng);
  t.rng_noise = root.fork(kStreamNoise);
  t.rng_plan = root.fork(kStreamPlan);
  t.rng_shuffle = root.fork(kStreamShuffle);

  t.lr_schedule = build_lr_schedule(config, t.total_steps);
  t.lr_prefix.resize(t.total_steps);
  double acc = 0.0;
  for (int64_t s = 0; s < t.total_steps; ++s) {
    acc += t.lr_schedule[s];
    t.lr_prefix[s] = acc;
  }
  require(acc > 0.0, ErrorKind::Config, "train: zero total learning rate");

  t.order.resize(data.x.rows());
  std::iota(t.order.begin(), t.order.end(), 0);
  t.order_pos = t.order.size();  // forces a shuffle at the first batch
  return t;
}

Snapshot Trainer::take_snapshot(int64_t label) const {
  // Snapshots use an independent noise fork so taking them never perturbs
  // the training trajectory.
  Snapshot snap;
  snap.step = label;
  Rng snap_rng = Rng(config.seed).fork(kStreamSnapshot + static_cast<uint64_t>(label));
  double t_epoch = static_cast<double>(step) * config.batch_size /
                   static_cast<double>(data->x.rows());
  Vector noise(model.dim, 0.0);
  if (config.filter_noise.enabled) {
    double amp = config.filter_noise.sigma * std::exp(-t_epoch / config.filter_noise.tau_epochs);
    for (auto& v : noise) v = amp * snap_rng.normal();
  }
  ModelTrace trace = model_forward(model, noise);
  snap.generator = central_crop(trace.g, model.d);
  snap.l = trace.l;
  return snap;
}

ModelLossResult evaluate_model_loss(SymmetryModel& model,
                                    MarginalEstimator& marg,
                                    const ConditionalEstimator& cond,
                                    const Matrix& xb, const Vector& noise,
                                    int64_t k, double cov_jitter, double alpha,
                                    const LossWeights& weights,
                                    const UniformityPlan& plan, bool with_grad) {
  const int64_t d = xb.cols();
  ModelTrace trace = model_forward(model, noise);
  ModelLossResult out;
  out.y = model_apply(xb, trace.l);
  Matrix dy(out.y.rows(), d);

  // Marginal entropies: frozen estimator parameters, gradient into Y with
  // the resolution weight beta / d.
  double marg_entropy_mean = 0.0;
  for (int64_t i = 0; i < d; ++i)
    marg_entropy_mean += marginal_entropy_accumulate(
        marg, i, out.y, 0.0,
        with_grad ? weights.resolution / static_cast<double>(d) : 0.0, &dy);
  marg_entropy_mean /= static_cast<double>(d);

  CovTrace cov = batch_covariance_trace(out.y);
  Matrix c_jitter = cov.c;
  for (int64_t i = 0; i < d; ++i) c_jitter(i, i) += cov_jitter;
  LowRankEntropy ent = lowrank_entropy(c_jitter, k, alpha);
  out.spectrum = ent.lambda;

  out.alignment =
      alignment_loss_grad(out.y, with_grad ? weights.alignment : 0.0, &dy);
  out.resolution = resolution_loss(marg_entropy_mean, ent.h_bar);
  out.preservation = preservation_loss(ent.h_bar);
  out.uniformity = uniformity_loss(marg, cond, out.y, plan,
                                   with_grad ? weights.uniformity : 0.0, &dy);

  if (with_grad) {
    // h_bar enters resolution with -beta and preservation with -delta.
    Matrix dc = lowrank_entropy_backward(
        ent, -(weights.resolution + weights.preservation));
    batch_covariance_backward(cov, dc, dy);
    Matrix dl = matmul_tn(xb, dy);
    model_backward(model, trace, dl);
  }
  return out;
}

LogRow Trainer::run_step() {
  const Matrix& x = data->x;
  const int64_t n_total = x.rows();
  const int64_t d = x.cols();
  const int64_t b = config.batch_size;
  const LossWeights& w = config.weights;
  const int64_t step_now = step + 1;  // 1-based

  // Batch without replacement within an epoch.
  if (order_pos + b > static_cast<int64_t>(order.size())) {
    rng_shuffle.shuffle(order);
    order_pos = 0;
  }
  Matrix xb(b, d);
  for (int64_t r = 0; r < b; ++r) {
    const double* src = x.row(order[order_pos + r]);
    std::copy(src, src + d, xb.row(r));
  }
  order_pos += b;

  // Filter noise decays in dataset passes regardless of step semantics.
  double t_epoch = static_cast<double>(step) * b / static_cast<double>(n_total);
  Vector noise(model.dim, 0.0);
  if (config.filter_noise.enabled) {
    double amp = config.filter_noise.sigma *
                 std::exp(-t_epoch / config.filter_noise.tau_epochs);
    for (auto& v : noise) v = amp * rng_noise.normal();
  }

  double t_n = lr_prefix[step_now - 1] / lr_prefix[total_steps - 1];
  int64_t k = current_rank(t_n, d);

  UniformityPlan plan = sample_uniformity_plan(
      rng_plan, b, d, config.uniformity.rows,
      config.uniformity.positions_per_direction,
      config.uniformity.pairs_per_direction);

  model.zero_adjoints();
  ModelLossResult loss;
  LossBreakdown parts;
  try {
    loss = evaluate_model_loss(model, marginal, conditional, xb, noise, k,
                               config.cov_jitter, config.rank_alpha, w, plan,
                               /*with_grad=*/true);
    parts = total_loss(loss.alignment, loss.resolution, loss.uniformity,
                       loss.preservation, w);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Numeric) throw;
    std::ostringstream diag;
    diag << "{\"step\":" << step_now << ",\"alignment\":" << loss.alignment
         << ",\"resolution\":" << loss.resolution
         << ",\"uniformity\":" << loss.uniformity
         << ",\"preservation\":" << loss.preservation << ",\"eigenvalues\":[";
    for (size_t i = 0; i < loss.spectrum.size(); ++i)
      diag << (i ? "," : "") << loss.spectrum[i];
    diag << "]}";
    throw TrainAbort(std::string("training aborted: ") + e.what(), diag.str());
  }

  double lr_now = lr_schedule[step_now - 1];
  adam_step(opt.model_a, model.a, lr_now);
  adam_step(opt.model_psi, model.psi0, lr_now);

  auto [marg_nll, cond_nll] =
      estimator_step(marginal, conditional, loss.y, (step_now - 1) % d,
                     config.estimators.cond_rows, opt, config.lr_estimators);

  ++step;
  LogRow row;
  row.step = step_now;
  row.alignment = parts.alignment;
  row.resolution = parts.resolution;
  row.uniformity = parts.uniformity;
  row.preservation = parts.preservation;
  row.total = parts.total;
  row.k = k;
  row.t_n = t_n;
  row.lr = lr_now;
  row.marginal_nll = marg_nll;
  row.conditional_nll = cond_nll;
  return row;
}

TrainResult train(const TrainConfig& config, const Dataset& data,
                  const ProgressFn& progress) {
  Trainer t = Trainer::create(config, data);
  TrainResult result;
  result.total_steps = t.total_steps;
  result.snapshots.push_back(t.take_snapshot(0));
  result.log.reserve(t.total_steps);
  result.lr_history.reserve(t.total_steps);

  for (int64_t s = 1; s <= t.total_steps; ++s) {
    LogRow row = t.run_step();
    result.lr_history.push_back(row.lr);
    result.log.push_back(row);
    if (config.snapshot_every > 0 && s % config.snapshot_every == 0)
      result.snapshots.push_back(t.take_snapshot(s));
    if (progress) {
      LossBreakdown parts;
      parts.alignment = row.alignment;
      parts.resolution = row.resolution;
      parts.uniformity = row.uniformity;
      parts.preservation = row.preservation;
      parts.total = row.total;
      progress(s, t.total_steps, parts);
    }
  }

  // Orthogonality is guaranteed by the parametrization; assert anyway.
  Matrix g = make_generator(t.model);
  Matrix gtg = matmul_tn(g, g);
  for (int64_t i = 0; i < gtg.rows(); ++i) gtg(i, i) -= 1.0;
  require(frobenius_norm(gtg) < 1e-8, ErrorKind::Numeric,
          "train: generator lost orthogonality");

  result.model = std::move(t.model);
  result.marginal = std::move(t.marginal);
  result.conditional = std::move(t.conditional);
  return result;
}

}  // namespace symforge
