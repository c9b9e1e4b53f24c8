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

#include <cmath>

#include "symforge/matrix.hpp"

namespace symforge {

// Adam with bias correction (beta1 0.9, beta2 0.999, eps 1e-8), one state
// per parameter block.
struct AdamState {
  Vector m, v;
  int64_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void update(double* p, const double* g, size_t n, double lr) {
    if (m.size() != n) {
      m.assign(n, 0.0);
      v.assign(n, 0.0);
      t = 0;
    }
    ++t;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (size_t i = 0; i < n; ++i) {
      m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
      v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
      p[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
    }
  }
};

inline void adam_step(AdamState& st, DualSlot<Matrix>& block, double lr) {
  st.update(block.value.data(), block.adjoint.data(),
            static_cast<size_t>(block.value.size()), lr);
}

inline void adam_step(AdamState& st, DualSlot<Vector>& block, double lr) {
  st.update(block.value.data(), block.adjoint.data(), block.value.size(), lr);
}

}  // namespace symforge
