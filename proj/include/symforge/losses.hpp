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

#include "symforge/estimators.hpp"
#include "symforge/matrix.hpp"
#include "symforge/rng.hpp"

namespace symforge {

struct LossWeights {
  double alignment = 1.5;
  double resolution = 1.5;
  double uniformity = 2.5;
  double preservation = 2.5;
};

struct LossBreakdown {
  double alignment = 0.0;
  double resolution = 0.0;
  double uniformity = 0.0;
  double preservation = 0.0;
  double total = 0.0;
};

// Negative mean Pearson correlation of adjacent output components. Column
// variances are floored at 1e-12 in the denominator.
double alignment_loss(const Matrix& y);

// Value plus coef * gradient accumulated into dy (when non-null).
double alignment_loss_grad(const Matrix& y, double coef, Matrix* dy);

// Mean marginal entropy minus the per-rank joint entropy surrogate.
inline double resolution_loss(double mean_marginal_entropy, double h_bar_k) {
  return mean_marginal_entropy - h_bar_k;
}

inline double preservation_loss(double h_bar_k) { return -h_bar_k; }

// Sample-based KL proxy between the estimated pair densities of (i, j) and
// (i+di, j+dj), evaluated on the batch rows drawn at (i, j):
//   mean_n [log f_i(y_i) + log f_{j|i}(y_j|y_i)
//           - log f_{i+di}(y_i) - log f_{j+dj|i+di}(y_j|y_i)].
double kl_shift_proxy(const MarginalEstimator& marg,
                      const ConditionalEstimator& cond, const Matrix& y,
                      int64_t i, int64_t j, int64_t di, int64_t dj);

// Which rows and (i, j) pairs participate in a uniformity evaluation.
// Sampling i uniformly from its valid range and j uniformly from the valid
// targets makes the subsampled average an unbiased estimate of the full
// pair average (every i has the same number of valid j).
struct UniformityPlan {
  std::vector<int64_t> rows;
  struct Direction {
    int shift = 0;                          // di = dj
    std::vector<int> positions;             // sampled i
    std::vector<std::vector<int>> targets;  // sampled j per position
  };
  Direction minus, plus;
};

UniformityPlan full_uniformity_plan(int64_t rows, int64_t d);
UniformityPlan sample_uniformity_plan(Rng& rng, int64_t n_rows, int64_t d,
                                      int64_t row_count, int positions_per_dir,
                                      int pairs_per_dir);

// Average KL shift proxy over the plan's pairs, summed over the two shift
// directions. Estimator parameters stay frozen; gradients flow into dy only.
double uniformity_loss(const MarginalEstimator& marg,
                       const ConditionalEstimator& cond, const Matrix& y,
                       const UniformityPlan& plan, double coef, Matrix* dy);

// All pairs, all rows (test-scale convenience).
double uniformity_loss_full(const MarginalEstimator& marg,
                            const ConditionalEstimator& cond, const Matrix& y);

// Weighted sum; rejects non-finite parts naming the offending term.
LossBreakdown total_loss(double alignment, double resolution, double uniformity,
                         double preservation, const LossWeights& w);

}  // namespace symforge
