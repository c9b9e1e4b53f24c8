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

#include <string>

#include "symforge/datagen.hpp"
#include "symforge/matrix.hpp"
#include "symforge/model.hpp"

namespace symforge {

// Frobenius (Hilbert-Schmidt) cosine similarity of two same-shape matrices.
double frobenius_cosine(const Matrix& g1, const Matrix& g2);

// Entrywise root mean squared difference.
double generator_rmse(const Matrix& g1, const Matrix& g2);

struct GeneratorAlignment {
  Matrix oriented;       // the best of {G, G^T, -G, -G^T}
  bool transposed = false;
  int sign = +1;
  double cosine = 0.0;
  double rmse = 0.0;
};

// The learned generator is only determined up to a sign and a reflection;
// pick the candidate with the highest cosine against the ideal.
GeneratorAlignment best_alignment(const Matrix& learned, const Matrix& ideal);

// argmax over p in [1, max_power] of the best-aligned cosine against the
// p-th power of the ideal generator; p* = 1 means the minimal generator.
int64_t minimality_check(const Matrix& learned, const Matrix& ideal,
                         int64_t max_power);

// Relative residual of one-component equivariance on interior components:
// shifting the output of L by one against transforming the input by the
// ideal generator first. Interior trims (d-1)/4 from each side.
double equivariance_residual(const Matrix& l, const Matrix& g_ideal,
                             const Matrix& x, int shift_dir);
double equivariance_residual(const Matrix& l, const Matrix& g_ideal,
                             const Matrix& x);  // best over both directions

// RMSE between Y and the hidden signals, minimized over
// {identity, index reversal} x {+1, -1} applied to Y.
double reconstruction_error(const Matrix& y, const Matrix& h);

// Gaussian partial correlation of (y_{i-1}, y_{i+1}) given y_i for each
// interior i; near zero for a first-order Markov field.
Vector markov_diagnostic(const Matrix& y);

struct EvalReport {
  double cosine_similarity = 0.0;
  double rmse = 0.0;
  std::string orientation;  // "as-is" | "transposed"
  int sign = +1;
  int64_t minimal_power = 0;
  double equivariance_residual = 0.0;
  double reconstruction_rmse = 0.0;
  Vector markov_profile;
};

// Full comparison of a trained model against the dataset's ground truth.
// The padded learned generator is centrally cropped to d x d first.
EvalReport evaluate_model(const SymmetryModel& model, const Dataset& data,
                          int64_t eval_rows = 0);

}  // namespace symforge
