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
#include "symforge/estimators.hpp"
#include "symforge/model.hpp"

namespace symforge {

// Binary container: "SYFC" magic, format version, JSON header describing the
// named little-endian float64 blobs, then the raw blobs.

void save_dataset(const std::string& path, const Dataset& ds);
Dataset load_dataset(const std::string& path);
std::string dataset_meta_json(const Dataset& ds);
void export_dataset_csv(const std::string& path, const Dataset& ds);

struct Checkpoint {
  SymmetryModel model;
  MarginalEstimator marginal;
  ConditionalEstimator conditional;
  int64_t step = 0;
};

void save_checkpoint(const std::string& path, const SymmetryModel& model,
                     const MarginalEstimator& marginal,
                     const ConditionalEstimator& conditional, int64_t step);
Checkpoint load_checkpoint(const std::string& path);

void write_matrix_csv(const std::string& path, const Matrix& m);
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);
bool file_exists(const std::string& path);
void make_directories(const std::string& path);

}  // namespace symforge
