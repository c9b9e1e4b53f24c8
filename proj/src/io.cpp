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

#include "symforge/io.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace symforge {

namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'S', 'Y', 'F', 'C'};
constexpr uint32_t kFormatVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "container serialization assumes a little-endian host");

struct BlobRef {
  std::string name;
  const double* data;
  int64_t count;
};

void write_container(const std::string& path, const json& meta,
                     const std::vector<BlobRef>& blobs) {
  json header;
  header["meta"] = meta;
  header["blobs"] = json::array();
  int64_t offset = 0;
  for (const auto& b : blobs) {
    header["blobs"].push_back({{"name", b.name}, {"offset", offset}, {"count", b.count}});
    offset += b.count;
  }
  std::string header_text = header.dump();

  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::Io, "cannot open for writing: " + path);
  out.write(kMagic, 4);
  uint32_t ver = kFormatVersion;
  uint64_t hlen = header_text.size();
  out.write(reinterpret_cast<const char*>(&ver), sizeof(ver));
  out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  out.write(header_text.data(), static_cast<std::streamsize>(hlen));
  for (const auto& b : blobs)
    out.write(reinterpret_cast<const char*>(b.data),
              static_cast<std::streamsize>(b.count * sizeof(double)));
  require(out.good(), ErrorKind::Io, "write failed: " + path);
}

struct Container {
  json meta;
  std::map<std::string, Vector> blobs;
};

Container read_container(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::Io, "cannot open: " + path);
  char magic[4];
  in.read(magic, 4);
  require(in.good() && std::memcmp(magic, kMagic, 4) == 0, ErrorKind::Io,
          "not a symforge container: " + path);
  uint32_t ver = 0;
  uint64_t hlen = 0;
  in.read(reinterpret_cast<char*>(&ver), sizeof(ver));
  in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  require(in.good() && ver == kFormatVersion, ErrorKind::Io,
          "unsupported container version in: " + path);
  std::string header_text(hlen, '\0');
  in.read(header_text.data(), static_cast<std::streamsize>(hlen));
  require(in.good(), ErrorKind::Io, "truncated header: " + path);

  json header = json::parse(header_text, nullptr, false);
  require(!header.is_discarded(), ErrorKind::Io, "corrupt header JSON: " + path);

  Container c;
  c.meta = header.at("meta");
  for (const auto& b : header.at("blobs")) {
    int64_t count = b.at("count").get<int64_t>();
    Vector data(static_cast<size_t>(count));
    in.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    require(in.good(), ErrorKind::Io, "truncated blob in: " + path);
    c.blobs.emplace(b.at("name").get<std::string>(), std::move(data));
  }
  return c;
}

const Vector& blob(const Container& c, const std::string& name) {
  auto it = c.blobs.find(name);
  require(it != c.blobs.end(), ErrorKind::Io, "missing blob: " + name);
  return it->second;
}

Matrix blob_matrix(const Container& c, const std::string& name, int64_t rows,
                   int64_t cols) {
  const Vector& v = blob(c, name);
  require(static_cast<int64_t>(v.size()) == rows * cols, ErrorKind::Io,
          "blob size mismatch: " + name);
  Matrix m(rows, cols);
  std::copy(v.begin(), v.end(), m.data());
  return m;
}

const char* signal_name(SignalKind k) {
  return k == SignalKind::Gaussian ? "gaussian" : "legendre";
}
const char* transform_name(TransformTag t) {
  switch (t) {
    case TransformTag::Identity: return "identity";
    case TransformTag::Permutation: return "permutation";
    case TransformTag::Dst1: return "dst1";
  }
  return "identity";
}

json dataset_meta(const Dataset& ds) {
  const DatasetConfig& c = ds.config;
  json modes = json::array();
  for (auto [l, m] : c.signal.legendre_modes) modes.push_back({l, m});
  return json{{"kind", "dataset"},
              {"n", c.n},
              {"d", c.d},
              {"signal", signal_name(c.signal.kind)},
              {"transform", transform_name(c.transform.tag)},
              {"permutation_seed", c.transform.perm_seed},
              {"seed", c.seed},
              {"noise_sigma", c.noise_sigma},
              {"amplitude_range", {c.signal.amplitude_lo, c.signal.amplitude_hi}},
              {"scale_range", {c.signal.scale_lo, c.signal.scale_hi}},
              {"legendre_modes", modes}};
}

}  // namespace

void save_dataset(const std::string& path, const Dataset& ds) {
  std::vector<BlobRef> blobs = {
      {"x", ds.x.data(), ds.x.size()},
      {"h", ds.h.data(), ds.h.size()},
      {"u", ds.u.data(), ds.u.size()},
      {"ideal_generator", ds.ideal_generator.data(), ds.ideal_generator.size()},
  };
  write_container(path, dataset_meta(ds), blobs);
}

Dataset load_dataset(const std::string& path) {
  Container c = read_container(path);
  const json& meta = c.meta;
  require(meta.value("kind", "") == "dataset", ErrorKind::Io,
          "container is not a dataset: " + path);
  Dataset ds;
  DatasetConfig& cfg = ds.config;
  cfg.n = meta.at("n").get<int64_t>();
  cfg.d = meta.at("d").get<int64_t>();
  cfg.seed = meta.at("seed").get<uint64_t>();
  cfg.noise_sigma = meta.at("noise_sigma").get<double>();
  std::string sig = meta.at("signal").get<std::string>();
  cfg.signal.kind = sig == "legendre" ? SignalKind::Legendre : SignalKind::Gaussian;
  std::string tr = meta.at("transform").get<std::string>();
  cfg.transform.tag = tr == "permutation" ? TransformTag::Permutation
                      : tr == "dst1"      ? TransformTag::Dst1
                                          : TransformTag::Identity;
  cfg.transform.perm_seed = meta.at("permutation_seed").get<uint64_t>();
  cfg.signal.amplitude_lo = meta.at("amplitude_range")[0].get<double>();
  cfg.signal.amplitude_hi = meta.at("amplitude_range")[1].get<double>();
  cfg.signal.scale_lo = meta.at("scale_range")[0].get<double>();
  cfg.signal.scale_hi = meta.at("scale_range")[1].get<double>();
  cfg.signal.legendre_modes.clear();
  for (const auto& lm : meta.at("legendre_modes"))
    cfg.signal.legendre_modes.emplace_back(lm[0].get<int>(), lm[1].get<int>());

  ds.x = blob_matrix(c, "x", cfg.n, cfg.d);
  ds.h = blob_matrix(c, "h", cfg.n, cfg.d);
  ds.u = blob_matrix(c, "u", cfg.d, cfg.d);
  ds.ideal_generator = blob_matrix(c, "ideal_generator", cfg.d, cfg.d);
  return ds;
}

std::string dataset_meta_json(const Dataset& ds) { return dataset_meta(ds).dump(2); }

void export_dataset_csv(const std::string& path, const Dataset& ds) {
  write_matrix_csv(path, ds.x);
}

void save_checkpoint(const std::string& path, const SymmetryModel& model,
                     const MarginalEstimator& marginal,
                     const ConditionalEstimator& conditional, int64_t step) {
  json meta{{"kind", "checkpoint"},
            {"d", model.d},
            {"dim", model.dim},
            {"p_min", model.p_min},
            {"p_max", model.p_max},
            {"step", step},
            {"kernels", marginal.kernels},
            {"hidden", conditional.hidden},
            {"sigma_scale", conditional.sigma_scale}};
  std::vector<BlobRef> blobs = {
      {"a", model.a.value.data(), model.a.value.size()},
      {"psi0", model.psi0.value.data(), static_cast<int64_t>(model.psi0.value.size())},
      {"marg.logit", marginal.logit_w.value.data(), marginal.logit_w.value.size()},
      {"marg.mu", marginal.mu.value.data(), marginal.mu.value.size()},
      {"marg.sigma", marginal.raw_sigma.value.data(), marginal.raw_sigma.value.size()},
  };
  const Mlp* nets[3] = {&conditional.net_w, &conditional.net_mu, &conditional.net_sigma};
  const char* net_names[3] = {"w", "mu", "sigma"};
  for (int nn = 0; nn < 3; ++nn) {
    const Dense* layers[3] = {&nets[nn]->l1, &nets[nn]->l2, &nets[nn]->l3};
    for (int ll = 0; ll < 3; ++ll) {
      std::string base = std::string("cond.") + net_names[nn] + ".l" + std::to_string(ll + 1);
      blobs.push_back({base + ".w", layers[ll]->w.value.data(), layers[ll]->w.value.size()});
      blobs.push_back({base + ".b", layers[ll]->b.value.data(),
                       static_cast<int64_t>(layers[ll]->b.value.size())});
    }
  }
  write_container(path, meta, blobs);
}

Checkpoint load_checkpoint(const std::string& path) {
  Container c = read_container(path);
  const json& meta = c.meta;
  require(meta.value("kind", "") == "checkpoint", ErrorKind::Io,
          "container is not a checkpoint: " + path);
  Checkpoint ck;
  ck.step = meta.at("step").get<int64_t>();
  SymmetryModel& m = ck.model;
  m.d = meta.at("d").get<int64_t>();
  m.dim = meta.at("dim").get<int64_t>();
  m.p_min = meta.at("p_min").get<int64_t>();
  m.p_max = meta.at("p_max").get<int64_t>();
  m.a = make_dual(blob_matrix(c, "a", m.dim, m.dim));
  m.psi0 = make_dual(blob(c, "psi0"));

  int kernels = meta.at("kernels").get<int>();
  ck.marginal.d = m.d;
  ck.marginal.kernels = kernels;
  ck.marginal.logit_w = make_dual(blob_matrix(c, "marg.logit", m.d, kernels));
  ck.marginal.mu = make_dual(blob_matrix(c, "marg.mu", m.d, kernels));
  ck.marginal.raw_sigma = make_dual(blob_matrix(c, "marg.sigma", m.d, kernels));

  ConditionalEstimator& ce = ck.conditional;
  ce.d = m.d;
  ce.kernels = kernels;
  ce.hidden = meta.at("hidden").get<int64_t>();
  ce.sigma_scale = meta.at("sigma_scale").get<double>();
  int64_t out = ce.d * ce.kernels;
  Mlp* nets[3] = {&ce.net_w, &ce.net_mu, &ce.net_sigma};
  const char* net_names[3] = {"w", "mu", "sigma"};
  int64_t in_dims[3] = {ce.d, ce.hidden, ce.hidden};
  int64_t out_dims[3] = {ce.hidden, ce.hidden, out};
  for (int nn = 0; nn < 3; ++nn) {
    Dense* layers[3] = {&nets[nn]->l1, &nets[nn]->l2, &nets[nn]->l3};
    for (int ll = 0; ll < 3; ++ll) {
      std::string base = std::string("cond.") + net_names[nn] + ".l" + std::to_string(ll + 1);
      layers[ll]->w = make_dual(blob_matrix(c, base + ".w", out_dims[ll], in_dims[ll]));
      layers[ll]->b = make_dual(blob(c, base + ".b"));
    }
  }
  return ck;
}

void write_matrix_csv(const std::string& path, const Matrix& m) {
  std::ofstream out(path);
  require(out.good(), ErrorKind::Io, "cannot open for writing: " + path);
  out.precision(17);
  for (int64_t r = 0; r < m.rows(); ++r) {
    for (int64_t c = 0; c < m.cols(); ++c) {
      if (c) out << ',';
      out << m(r, c);
    }
    out << '\n';
  }
  require(out.good(), ErrorKind::Io, "write failed: " + path);
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::Io, "cannot open for writing: " + path);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  require(out.good(), ErrorKind::Io, "write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::Io, "cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool file_exists(const std::string& path) {
  std::error_code ec;
  return std::filesystem::exists(path, ec);
}

void make_directories(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  require(!ec, ErrorKind::Io, "cannot create directory: " + path);
}

}  // namespace symforge
