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

#include "symforge/config.hpp"

#include <set>

#include <json.hpp>

namespace symforge {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::set<std::string>& allowed,
                const std::string& where) {
  require(obj.is_object(), ErrorKind::Config, where + ": expected a JSON object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    require(allowed.count(it.key()) > 0, ErrorKind::Config,
            where + ": unknown key \"" + it.key() + "\"");
  }
}

void parse_dataset(const json& j, DatasetConfig& cfg) {
  check_keys(j, {"signal", "transform", "n", "d", "noise_sigma", "seed",
                 "amplitude_range", "scale_range", "legendre_modes",
                 "permutation_seed"},
             "dataset");
  if (j.contains("signal")) {
    std::string s = j["signal"].get<std::string>();
    if (s == "gaussian") cfg.signal.kind = SignalKind::Gaussian;
    else if (s == "legendre") cfg.signal.kind = SignalKind::Legendre;
    else fail(ErrorKind::Config, "dataset.signal: expected gaussian|legendre");
  }
  // The default scale range follows the signal family.
  if (cfg.signal.kind == SignalKind::Legendre) {
    cfg.signal.scale_lo = 6.0;
    cfg.signal.scale_hi = 15.0;
  }
  if (j.contains("transform")) {
    std::string t = j["transform"].get<std::string>();
    if (t == "identity") cfg.transform.tag = TransformTag::Identity;
    else if (t == "permutation") cfg.transform.tag = TransformTag::Permutation;
    else if (t == "dst1") cfg.transform.tag = TransformTag::Dst1;
    else fail(ErrorKind::Config, "dataset.transform: expected identity|permutation|dst1");
  }
  if (j.contains("n")) cfg.n = j["n"].get<int64_t>();
  if (j.contains("d")) cfg.d = j["d"].get<int64_t>();
  if (j.contains("noise_sigma")) cfg.noise_sigma = j["noise_sigma"].get<double>();
  if (j.contains("seed")) cfg.seed = j["seed"].get<uint64_t>();
  if (j.contains("amplitude_range")) {
    cfg.signal.amplitude_lo = j["amplitude_range"].at(0).get<double>();
    cfg.signal.amplitude_hi = j["amplitude_range"].at(1).get<double>();
  }
  if (j.contains("scale_range")) {
    cfg.signal.scale_lo = j["scale_range"].at(0).get<double>();
    cfg.signal.scale_hi = j["scale_range"].at(1).get<double>();
  }
  if (j.contains("legendre_modes")) {
    cfg.signal.legendre_modes.clear();
    for (const auto& lm : j["legendre_modes"]) {
      int l = lm.at(0).get<int>(), m = lm.at(1).get<int>();
      require((l == 2 || l == 3) && m == 1, ErrorKind::Config,
              "dataset.legendre_modes: supported modes are (2,1) and (3,1)");
      cfg.signal.legendre_modes.emplace_back(l, m);
    }
    require(!cfg.signal.legendre_modes.empty(), ErrorKind::Config,
            "dataset.legendre_modes: empty mode list");
  }
  cfg.transform.perm_seed =
      j.contains("permutation_seed") ? j["permutation_seed"].get<uint64_t>() : cfg.seed;
  require(cfg.noise_sigma >= 0.0, ErrorKind::Config,
          "dataset.noise_sigma: must be nonnegative");
}

void parse_train(const json& j, TrainConfig& cfg) {
  check_keys(j, {"steps", "batch_size", "lr_model", "lr_estimators", "lr_schedule",
                 "seed", "snapshot_every", "loss_weights", "pad", "rank_alpha",
                 "epoch_semantics", "filter_noise", "estimators", "uniformity",
                 "cov_jitter"},
             "train");
  if (j.contains("steps")) cfg.steps = j["steps"].get<int64_t>();
  if (j.contains("batch_size")) cfg.batch_size = j["batch_size"].get<int64_t>();
  if (j.contains("lr_model")) cfg.lr_model = j["lr_model"].get<double>();
  if (j.contains("lr_estimators")) cfg.lr_estimators = j["lr_estimators"].get<double>();
  if (j.contains("lr_schedule")) {
    std::string s = j["lr_schedule"].get<std::string>();
    if (s == "constant") cfg.lr_schedule = LrScheduleKind::Constant;
    else if (s == "linear_decay") cfg.lr_schedule = LrScheduleKind::LinearDecay;
    else fail(ErrorKind::Config, "train.lr_schedule: expected constant|linear_decay");
  }
  if (j.contains("seed")) cfg.seed = j["seed"].get<uint64_t>();
  if (j.contains("snapshot_every")) cfg.snapshot_every = j["snapshot_every"].get<int64_t>();
  if (j.contains("loss_weights")) {
    const json& w = j["loss_weights"];
    check_keys(w, {"alignment", "resolution", "uniformity", "preservation"},
               "train.loss_weights");
    if (w.contains("alignment")) cfg.weights.alignment = w["alignment"].get<double>();
    if (w.contains("resolution")) cfg.weights.resolution = w["resolution"].get<double>();
    if (w.contains("uniformity")) cfg.weights.uniformity = w["uniformity"].get<double>();
    if (w.contains("preservation")) cfg.weights.preservation = w["preservation"].get<double>();
    require(cfg.weights.alignment >= 0 && cfg.weights.resolution >= 0 &&
                cfg.weights.uniformity >= 0 && cfg.weights.preservation >= 0,
            ErrorKind::Config, "train.loss_weights: weights must be nonnegative");
  }
  if (j.contains("pad")) cfg.pad = j["pad"].get<int64_t>();
  if (j.contains("rank_alpha")) cfg.rank_alpha = j["rank_alpha"].get<double>();
  if (j.contains("epoch_semantics")) {
    std::string s = j["epoch_semantics"].get<std::string>();
    if (s == "steps") cfg.epochs_are_passes = false;
    else if (s == "passes") cfg.epochs_are_passes = true;
    else fail(ErrorKind::Config, "train.epoch_semantics: expected steps|passes");
  }
  if (j.contains("filter_noise")) {
    const json& f = j["filter_noise"];
    check_keys(f, {"sigma", "tau_epochs", "enabled"}, "train.filter_noise");
    if (f.contains("sigma")) cfg.filter_noise.sigma = f["sigma"].get<double>();
    if (f.contains("tau_epochs")) cfg.filter_noise.tau_epochs = f["tau_epochs"].get<double>();
    if (f.contains("enabled")) cfg.filter_noise.enabled = f["enabled"].get<bool>();
  }
  if (j.contains("estimators")) {
    const json& e = j["estimators"];
    check_keys(e, {"kernels", "hidden_multiple", "sigma_scale", "cond_rows"},
               "train.estimators");
    if (e.contains("kernels")) cfg.estimators.kernels = e["kernels"].get<int>();
    if (e.contains("hidden_multiple"))
      cfg.estimators.hidden_multiple = e["hidden_multiple"].get<int64_t>();
    if (e.contains("sigma_scale")) cfg.estimators.sigma_scale = e["sigma_scale"].get<double>();
    if (e.contains("cond_rows")) cfg.estimators.cond_rows = e["cond_rows"].get<int64_t>();
  }
  if (j.contains("uniformity")) {
    const json& u = j["uniformity"];
    check_keys(u, {"pairs_per_direction", "positions_per_direction", "rows"},
               "train.uniformity");
    if (u.contains("pairs_per_direction"))
      cfg.uniformity.pairs_per_direction = u["pairs_per_direction"].get<int>();
    if (u.contains("positions_per_direction"))
      cfg.uniformity.positions_per_direction = u["positions_per_direction"].get<int>();
    if (u.contains("rows")) cfg.uniformity.rows = u["rows"].get<int64_t>();
  }
  if (j.contains("cov_jitter")) cfg.cov_jitter = j["cov_jitter"].get<double>();
}

void parse_eval(const json& j, EvalConfig& cfg) {
  check_keys(j, {"png", "eval_rows"}, "eval");
  if (j.contains("png")) cfg.png = j["png"].get<bool>();
  if (j.contains("eval_rows")) cfg.eval_rows = j["eval_rows"].get<int64_t>();
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
  json root = json::parse(json_text, nullptr, false);
  require(!root.is_discarded(), ErrorKind::Config, "config: invalid JSON");
  check_keys(root, {"dataset", "train", "eval"}, "config");
  RunConfig cfg;
  try {
    if (root.contains("dataset")) parse_dataset(root["dataset"], cfg.dataset);
    else parse_dataset(json::object(), cfg.dataset);
    if (root.contains("train")) parse_train(root["train"], cfg.train);
    if (root.contains("eval")) parse_eval(root["eval"], cfg.eval);
  } catch (const json::exception& e) {
    fail(ErrorKind::Config, std::string("config: ") + e.what());
  }
  return cfg;
}

std::string resolved_config_json(const RunConfig& config) {
  const DatasetConfig& ds = config.dataset;
  const TrainConfig& tr = config.train;
  json modes = json::array();
  for (auto [l, m] : ds.signal.legendre_modes) modes.push_back({l, m});
  json root;
  root["dataset"] = {
      {"signal", ds.signal.kind == SignalKind::Gaussian ? "gaussian" : "legendre"},
      {"transform", ds.transform.tag == TransformTag::Identity      ? "identity"
                    : ds.transform.tag == TransformTag::Permutation ? "permutation"
                                                                    : "dst1"},
      {"n", ds.n},
      {"d", ds.d},
      {"noise_sigma", ds.noise_sigma},
      {"seed", ds.seed},
      {"permutation_seed", ds.transform.perm_seed},
      {"amplitude_range", {ds.signal.amplitude_lo, ds.signal.amplitude_hi}},
      {"scale_range", {ds.signal.scale_lo, ds.signal.scale_hi}},
      {"legendre_modes", modes}};
  root["train"] = {
      {"steps", tr.steps},
      {"batch_size", tr.batch_size},
      {"lr_model", tr.lr_model},
      {"lr_estimators", tr.lr_estimators},
      {"lr_schedule", tr.lr_schedule == LrScheduleKind::Constant ? "constant" : "linear_decay"},
      {"seed", tr.seed},
      {"snapshot_every", tr.snapshot_every},
      {"loss_weights",
       {{"alignment", tr.weights.alignment},
        {"resolution", tr.weights.resolution},
        {"uniformity", tr.weights.uniformity},
        {"preservation", tr.weights.preservation}}},
      {"pad", tr.pad},
      {"rank_alpha", tr.rank_alpha},
      {"epoch_semantics", tr.epochs_are_passes ? "passes" : "steps"},
      {"filter_noise",
       {{"sigma", tr.filter_noise.sigma},
        {"tau_epochs", tr.filter_noise.tau_epochs},
        {"enabled", tr.filter_noise.enabled}}},
      {"estimators",
       {{"kernels", tr.estimators.kernels},
        {"hidden_multiple", tr.estimators.hidden_multiple},
        {"sigma_scale", tr.estimators.sigma_scale},
        {"cond_rows", tr.estimators.cond_rows}}},
      {"uniformity",
       {{"pairs_per_direction", tr.uniformity.pairs_per_direction},
        {"positions_per_direction", tr.uniformity.positions_per_direction},
        {"rows", tr.uniformity.rows}}},
      {"cov_jitter", tr.cov_jitter}};
  root["eval"] = {{"png", config.eval.png}, {"eval_rows", config.eval.eval_rows}};
  return root.dump(2);
}

}  // namespace symforge
