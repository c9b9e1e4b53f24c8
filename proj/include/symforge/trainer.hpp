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

#include <functional>
#include <string>

#include "symforge/adam.hpp"
#include "symforge/datagen.hpp"
#include "symforge/estimators.hpp"
#include "symforge/losses.hpp"
#include "symforge/model.hpp"

namespace symforge {

enum class LrScheduleKind { Constant, LinearDecay };

struct FilterNoiseConfig {
  double sigma = 0.1;
  double tau_epochs = 10.0;
  bool enabled = true;
};

struct UniformitySampling {
  int pairs_per_direction = 128;
  int positions_per_direction = 4;
  int64_t rows = 64;
};

struct EstimatorConfig {
  int kernels = 4;
  int64_t hidden_multiple = 4;
  double sigma_scale = 3.0;
  int64_t cond_rows = 256;  // conditional-net training sub-batch
};

struct TrainConfig {
  int64_t steps = 10000;
  int64_t batch_size = 512;
  double lr_model = 1e-3;
  double lr_estimators = 1e-3;
  LrScheduleKind lr_schedule = LrScheduleKind::Constant;
  uint64_t seed = 7;
  int64_t snapshot_every = 500;
  LossWeights weights;
  int64_t pad = 8;
  double rank_alpha = 5.0;
  // "10K epochs" is read as optimizer steps by default; with pass semantics
  // `steps` counts full passes over the dataset instead.
  bool epochs_are_passes = false;
  FilterNoiseConfig filter_noise;
  EstimatorConfig estimators;
  UniformitySampling uniformity;
  double cov_jitter = 1e-8;
};

struct Snapshot {
  int64_t step;
  Matrix generator;  // padded generator centrally cropped to d x d
  Matrix l;
};

struct LogRow {
  int64_t step;
  double alignment, resolution, uniformity, preservation, total;
  int64_t k;
  double t_n, lr;
  double marginal_nll, conditional_nll;
};

struct TrainResult {
  SymmetryModel model;
  MarginalEstimator marginal;
  ConditionalEstimator conditional;
  std::vector<Snapshot> snapshots;
  std::vector<LogRow> log;
  Vector lr_history;
  int64_t total_steps = 0;
};

// Thrown on a non-finite loss; carries a JSON diagnostic (step, term values,
// eigenvalue spectrum) for the abort dump.
class TrainAbort : public Error {
 public:
  TrainAbort(const std::string& what, std::string diagnostics)
      : Error(ErrorKind::Numeric, what), diagnostics_(std::move(diagnostics)) {}
  const std::string& diagnostics() const { return diagnostics_; }

 private:
  std::string diagnostics_;
};

// Per-parameter-block optimizer states for the whole system.
struct Optimizers {
  AdamState model_a, model_psi;
  AdamState marg_logit, marg_mu, marg_sigma;
  AdamState cond[3][3][2];  // [net][layer][w|b]
};

// Joint training: per step, (1) noisy normalized filter and group conv
// matrix, (2) Y = batch * L, (3) rank-scheduled loss backward into A and
// psi0 with one Adam update, (4) estimator NLL step on the detached batch.
using ProgressFn = std::function<void(int64_t step, int64_t total, const LossBreakdown&)>;
TrainResult train(const TrainConfig& config, const Dataset& data,
                  const ProgressFn& progress = nullptr);

// One optimizer step on preallocated state; exposed for tests.
struct Trainer {
  TrainConfig config;
  const Dataset* data = nullptr;
  SymmetryModel model;
  MarginalEstimator marginal;
  ConditionalEstimator conditional;
  Optimizers opt;
  Vector lr_schedule;   // declared up front, length = total steps
  Vector lr_prefix;     // running sums for normalized time
  int64_t total_steps = 0;
  int64_t step = 0;     // completed steps
  Rng rng_noise{0}, rng_plan{0}, rng_shuffle{0};
  std::vector<int64_t> order;  // epoch shuffle state
  int64_t order_pos = 0;

  static Trainer create(const TrainConfig& config, const Dataset& data);
  LogRow run_step();  // advances `step` by one
  Snapshot take_snapshot(int64_t label) const;
};

// Deterministic estimator update used inside run_step and by tests: one Adam
// step on marginal + conditional NLL for a detached batch.
std::pair<double, double> estimator_step(MarginalEstimator& marg,
                                         ConditionalEstimator& cond,
                                         const Matrix& y, int64_t mask_offset,
                                         int64_t cond_rows, Optimizers& opt,
                                         double lr);

// One full loss evaluation (all four terms) against a fixed batch, noise
// vector, rank and uniformity plan. With with_grad the weighted gradient is
// accumulated into the model adjoints; estimator parameters stay frozen
// either way. run_step and the gradient checks share this code path.
struct ModelLossResult {
  double alignment = 0.0, resolution = 0.0, uniformity = 0.0, preservation = 0.0;
  Matrix y;
  Vector spectrum;  // clamped eigenvalues of the jittered batch covariance
};
ModelLossResult evaluate_model_loss(SymmetryModel& model,
                                    MarginalEstimator& marg,
                                    const ConditionalEstimator& cond,
                                    const Matrix& xb, const Vector& noise,
                                    int64_t k, double cov_jitter, double alpha,
                                    const LossWeights& weights,
                                    const UniformityPlan& plan, bool with_grad);

}  // namespace symforge
