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
#include <functional>

namespace symforge {

// Worker count: min(hardware threads, SYMFORGE_THREADS) and at least 1.
int worker_count();

// Runs fn(begin, end) over fixed-size blocks of [0, n). Block boundaries
// depend only on (n, grain), never on the worker count, so any computation
// whose blocks write disjoint outputs produces identical results for every
// SYMFORGE_THREADS setting. fn must not call parallel_for recursively.
void parallel_for(int64_t n, int64_t grain,
                  const std::function<void(int64_t, int64_t)>& fn);

}  // namespace symforge
