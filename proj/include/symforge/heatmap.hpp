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

#include "symforge/matrix.hpp"

namespace symforge {

// Renders a matrix as a PNG heatmap with a blue-white-red diverging colormap
// centered at zero. scale_max fixes the color scale (0 picks max |entry|);
// cell_px is the square size per matrix entry.
void write_heatmap_png(const std::string& path, const Matrix& m,
                       double scale_max = 0.0, int cell_px = 8);

}  // namespace symforge
