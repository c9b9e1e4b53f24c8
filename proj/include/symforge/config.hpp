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
#include "symforge/trainer.hpp"

namespace symforge {

struct EvalConfig {
  bool png = true;
  int64_t eval_rows = 0;  // 0 = full dataset
};

struct RunConfig {
  DatasetConfig dataset;
  TrainConfig train;
  EvalConfig eval;
};

// Strict JSON parsing: unknown keys are rejected, omitted keys take the
// defaults. Table-ranged defaults depend on the signal kind (the Legendre
// scale range differs from the Gaussian one).
RunConfig parse_run_config(const std::string& json_text);

// Fully resolved configuration, suitable for echoing into the run directory.
std::string resolved_config_json(const RunConfig& config);

}  // namespace symforge
