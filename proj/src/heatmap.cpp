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

#include "symforge/heatmap.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace symforge {

namespace {

void put_u32_be(std::string& out, uint32_t v) {
  out.push_back(static_cast<char>((v >> 24) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>(v & 0xff));
}

void write_chunk(std::ofstream& out, const char type[4], const std::string& data) {
  std::string buf;
  put_u32_be(buf, static_cast<uint32_t>(data.size()));
  buf.append(type, 4);
  buf.append(data);
  uint32_t crc = static_cast<uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(buf.data() + 4), static_cast<uInt>(buf.size() - 4)));
  put_u32_be(buf, crc);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

// Diverging colormap: blue (negative) -> white (zero) -> red (positive).
void diverging_rgb(double t, unsigned char rgb[3]) {
  const double neg[3] = {59, 76, 192};
  const double pos[3] = {180, 4, 38};
  t = std::clamp(t, -1.0, 1.0);
  const double* end = t < 0 ? neg : pos;
  double a = std::fabs(t);
  for (int c = 0; c < 3; ++c)
    rgb[c] = static_cast<unsigned char>(std::lround(255.0 * (1.0 - a) + end[c] * a));
}

}  // namespace

void write_heatmap_png(const std::string& path, const Matrix& m,
                       double scale_max, int cell_px) {
  require(m.rows() > 0 && m.cols() > 0, ErrorKind::Config, "heatmap: empty matrix");
  require(cell_px >= 1 && cell_px <= 64, ErrorKind::Config, "heatmap: bad cell size");
  if (scale_max <= 0.0) scale_max = max_abs(m);
  if (scale_max <= 0.0) scale_max = 1.0;

  const int64_t width = m.cols() * cell_px;
  const int64_t height = m.rows() * cell_px;

  // Raw scanlines: filter byte 0 then RGB triples.
  std::string raw;
  raw.reserve(static_cast<size_t>(height * (1 + width * 3)));
  for (int64_t py = 0; py < height; ++py) {
    raw.push_back('\0');
    int64_t r = py / cell_px;
    for (int64_t px = 0; px < width; ++px) {
      int64_t c = px / cell_px;
      unsigned char rgb[3];
      diverging_rgb(m(r, c) / scale_max, rgb);
      raw.append(reinterpret_cast<const char*>(rgb), 3);
    }
  }

  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::string compressed(bound, '\0');
  int rc = compress2(reinterpret_cast<Bytef*>(compressed.data()), &bound,
                     reinterpret_cast<const Bytef*>(raw.data()),
                     static_cast<uLong>(raw.size()), 6);
  require(rc == Z_OK, ErrorKind::Io, "heatmap: deflate failed");
  compressed.resize(bound);

  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::Io, "cannot open for writing: " + path);
  static const unsigned char sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  out.write(reinterpret_cast<const char*>(sig), 8);

  std::string ihdr;
  put_u32_be(ihdr, static_cast<uint32_t>(width));
  put_u32_be(ihdr, static_cast<uint32_t>(height));
  ihdr.push_back(8);   // bit depth
  ihdr.push_back(2);   // truecolor
  ihdr.push_back(0);   // compression
  ihdr.push_back(0);   // filter
  ihdr.push_back(0);   // no interlace
  write_chunk(out, "IHDR", ihdr);
  write_chunk(out, "IDAT", compressed);
  write_chunk(out, "IEND", "");
  require(out.good(), ErrorKind::Io, "write failed: " + path);
}

}  // namespace symforge
