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

#include <cstdint>
#include <utility>
#include <vector>

#include "symforge/matrix.hpp"
#include "symforge/rng.hpp"

namespace symforge {

enum class SignalKind { Gaussian, Legendre };
enum class TransformTag { Identity, Permutation, Dst1 };

struct SignalSpec {
  SignalKind kind = SignalKind::Gaussian;
  double amplitude_lo = 0.5, amplitude_hi = 1.5;
  double scale_lo = 0.5, scale_hi = 2.5;
  std::vector<std::pair<int, int>> legendre_modes = {{2, 1}, {3, 1}};
};

struct TransformKind {
  TransformTag tag = TransformTag::Identity;
  uint64_t perm_seed = 0;  // only used for Permutation
};

struct DatasetConfig {
  SignalSpec signal;
  TransformKind transform;
  int64_t n = 50000;
  int64_t d = 33;
  double noise_sigma = 0.05;
  uint64_t seed = 1;
};

struct Dataset {
  Matrix x;                // observed, N x d
  Matrix h;                // hidden pre-transform signals, N x d
  Matrix u;                // d x d orthogonal transform
  Matrix ideal_generator;  // d x d, U^T T U
  DatasetConfig config;
};

// Superposition of Binomial(5, 0.5)-many basis signals with uniform
// center/amplitude/scale draws. No observation noise added here.
Vector sample_hidden_signal(Rng& rng, const SignalSpec& spec, int64_t d);

// Identity, seeded permutation matrix, or orthonormal DST-I.
Matrix build_transform(const TransformKind& kind, int64_t d);

// One-step non-cyclic shift, T[i+1][i] = 1.
Matrix shift_matrix(int64_t d);

// U^T T U: the minimal generator of the transformed dataset under the
// column convention x = U^T x~ (row form X = X~ U).
Matrix ideal_generator(const TransformKind& kind, int64_t d);

// H rows from sample_hidden_signal, X = H U + N(0, sigma^2), all derived
// from the config seed via per-row substreams.
Dataset build_dataset(const DatasetConfig& config);

}  // namespace symforge
