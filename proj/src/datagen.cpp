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

#include "symforge/datagen.hpp"

#include <cmath>

#include "symforge/threading.hpp"

namespace symforge {

namespace {

constexpr int kComponentTrials = 5;    // Binomial(n=5, p=0.5) component count
constexpr double kComponentProb = 0.5;
constexpr uint64_t kNoiseStream = 0x6e6f697365ull;  // per-row noise substream tag
constexpr uint64_t kPermStream = 0x7065726dull;

void add_gaussian(Vector& f, double amp, double center, double sigma) {
  const double norm = amp / (sigma * std::sqrt(2.0 * M_PI));
  const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
  for (size_t x = 0; x < f.size(); ++x) {
    double dx = static_cast<double>(x) - center;
    f[x] += norm * std::exp(-dx * dx * inv2s2);
  }
}

void add_legendre(Vector& f, double amp, double center, double scale, int l, int m) {
  for (size_t x = 0; x < f.size(); ++x) {
    double dx = static_cast<double>(x) - center;
    if (std::fabs(dx) > scale) continue;
    double t = dx / scale;
    if (std::fabs(t) > M_PI) continue;
    f[x] += amp * std::assoc_legendre(l, m, std::cos(t));
  }
}

}  // namespace

Vector sample_hidden_signal(Rng& rng, const SignalSpec& spec, int64_t d) {
  require(d >= 5, ErrorKind::Config, "sample_hidden_signal: d must be >= 5");
  if (spec.kind == SignalKind::Legendre) {
    require(!spec.legendre_modes.empty(), ErrorKind::Config,
            "sample_hidden_signal: empty Legendre mode list");
  }
  Vector f(d, 0.0);
  int count = rng.binomial(kComponentTrials, kComponentProb);
  for (int c = 0; c < count; ++c) {
    double center = rng.uniform(0.0, static_cast<double>(d));
    double amp = rng.uniform(spec.amplitude_lo, spec.amplitude_hi);
    double scl = rng.uniform(spec.scale_lo, spec.scale_hi);
    if (spec.kind == SignalKind::Gaussian) {
      add_gaussian(f, amp, center, scl);
    } else {
      auto [l, m] = spec.legendre_modes[rng.below(spec.legendre_modes.size())];
      add_legendre(f, amp, center, scl, l, m);
    }
  }
  return f;
}

Matrix build_transform(const TransformKind& kind, int64_t d) {
  require(d >= 2, ErrorKind::Config, "build_transform: d must be >= 2");
  switch (kind.tag) {
    case TransformTag::Identity:
      return Matrix::identity(d);
    case TransformTag::Permutation: {
      Rng rng = Rng(kind.perm_seed).fork(kPermStream);
      auto perm = rng.permutation(static_cast<int>(d));
      Matrix u(d, d);
      // Row form x = x~ U with component i sent to position perm[i].
      for (int64_t i = 0; i < d; ++i) u(i, perm[i]) = 1.0;
      return u;
    }
    case TransformTag::Dst1: {
      Matrix u(d, d);
      double norm = std::sqrt(2.0 / (d + 1.0));
      for (int64_t j = 0; j < d; ++j)
        for (int64_t k = 0; k < d; ++k)
          u(j, k) = norm * std::sin(M_PI * (j + 1.0) * (k + 1.0) / (d + 1.0));
      return u;
    }
  }
  fail(ErrorKind::Config, "build_transform: unknown transform kind");
}

Matrix shift_matrix(int64_t d) {
  Matrix t(d, d);
  for (int64_t i = 0; i + 1 < d; ++i) t(i + 1, i) = 1.0;
  return t;
}

Matrix ideal_generator(const TransformKind& kind, int64_t d) {
  Matrix u = build_transform(kind, d);
  return matmul_tn(u, matmul(shift_matrix(d), u));
}

Dataset build_dataset(const DatasetConfig& config) {
  require(config.n > 0, ErrorKind::Config, "build_dataset: N must be positive");
  require(config.d >= 5 && config.d % 2 == 1, ErrorKind::Config,
          "build_dataset: d must be odd and >= 5");
  require(config.signal.amplitude_lo < config.signal.amplitude_hi &&
              config.signal.scale_lo < config.signal.scale_hi,
          ErrorKind::Config, "build_dataset: empty parameter range");

  Dataset ds;
  ds.config = config;
  ds.u = build_transform(config.transform, config.d);
  ds.ideal_generator = ideal_generator(config.transform, config.d);
  ds.h = Matrix(config.n, config.d);
  ds.x = Matrix(config.n, config.d);

  const Rng root(config.seed);
  parallel_for(config.n, 1024, [&](int64_t begin, int64_t end) {
    for (int64_t row = begin; row < end; ++row) {
      Rng rng = root.fork(static_cast<uint64_t>(row));
      Vector sig = sample_hidden_signal(rng, config.signal, config.d);
      std::copy(sig.begin(), sig.end(), ds.h.row(row));
    }
  });

  gemm_nn(ds.h, ds.u, ds.x);

  if (config.noise_sigma > 0.0) {
    parallel_for(config.n, 1024, [&](int64_t begin, int64_t end) {
      for (int64_t row = begin; row < end; ++row) {
        Rng rng = root.fork(static_cast<uint64_t>(row) ^ kNoiseStream);
        double* xr = ds.x.row(row);
        for (int64_t j = 0; j < config.d; ++j)
          xr[j] += rng.normal(0.0, config.noise_sigma);
      }
    });
  }
  return ds;
}

}  // namespace symforge
