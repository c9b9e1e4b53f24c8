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

// symforge command line: gen | train | eval | report. Talks to the core
// exclusively through the C API in symforge.h.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "symforge.h"

namespace {

using nlohmann::json;

int exit_code_for(sf_status status) {
  if (status == SF_OK) return 0;
  std::cerr << "error: " << sf_last_error() << "\n";
  return status == SF_ERR_NUMERIC ? 3 : 2;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) {
    std::cerr << "error: cannot open config: " << path << "\n";
    std::exit(2);
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json load_config(const std::string& path) {
  json cfg = json::parse(read_file(path), nullptr, false);
  if (cfg.is_discarded()) {
    std::cerr << "error: invalid JSON in " << path << "\n";
    std::exit(2);
  }
  return cfg;
}

void progress_printer(int64_t step, int64_t total, double loss, void* user) {
  int64_t every = *static_cast<int64_t*>(user);
  if (step == 1 || step == total || step % every == 0)
    std::printf("step %lld/%lld  loss %.6f\n", static_cast<long long>(step),
                static_cast<long long>(total), loss);
}

struct DatasetHandle {
  sf_dataset* ds = nullptr;
  ~DatasetHandle() { sf_dataset_free(ds); }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"symforge: unsupervised symmetry-generator discovery"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
  std::string gen_config, gen_out, gen_csv;
  uint64_t gen_seed = 0;
  bool gen_has_seed = false;
  gen->add_option("--config", gen_config, "config JSON file")->required();
  gen->add_option("--out", gen_out, "output dataset container")->required();
  gen->add_option("--csv", gen_csv, "also export samples as CSV");
  gen->add_option("--seed", gen_seed, "override dataset seed")
      ->each([&](const std::string&) { gen_has_seed = true; });

  // train
  auto* train = app.add_subcommand("train", "train a symmetry model");
  std::string train_data, train_config, train_out, train_weights;
  int64_t train_steps = -1, train_batch = -1, train_snap = -1;
  uint64_t train_seed = 0;
  bool train_has_seed = false;
  double train_lr = -1.0;
  train->add_option("--data", train_data, "dataset container")->required();
  train->add_option("--config", train_config, "config JSON file");
  train->add_option("--out", train_out, "run directory")->required();
  train->add_option("--steps", train_steps, "override training steps");
  train->add_option("--batch", train_batch, "override batch size");
  train->add_option("--lr", train_lr, "override model learning rate");
  train->add_option("--seed", train_seed, "override training seed")
      ->each([&](const std::string&) { train_has_seed = true; });
  train->add_option("--weights", train_weights,
                    "override loss weights a,r,u,p (e.g. 0,0,0,1)");
  train->add_option("--snapshot-every", train_snap, "override snapshot cadence");

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a trained run");
  std::string eval_run, eval_data, eval_out;
  bool eval_no_png = false;
  int64_t eval_rows = 0;
  eval->add_option("--run", eval_run, "run directory")->required();
  eval->add_option("--data", eval_data, "dataset container")->required();
  eval->add_option("--out", eval_out, "report JSON path")->required();
  eval->add_flag("--no-png", eval_no_png, "skip PNG heatmaps");
  eval->add_option("--rows", eval_rows, "evaluate on the first N rows only");

  // report
  auto* report = app.add_subcommand("report", "aggregate eval reports");
  std::vector<std::string> report_paths;
  std::string report_out;
  bool report_csv = false;
  report->add_option("reports", report_paths, "report.json files")->required();
  report->add_option("--out", report_out, "write the table here (default: stdout)");
  report->add_flag("--csv", report_csv, "emit CSV instead of Markdown");

  CLI11_PARSE(app, argc, argv);

  if (gen->parsed()) {
    json cfg = load_config(gen_config);
    if (gen_has_seed) cfg["dataset"]["seed"] = gen_seed;
    DatasetHandle h;
    sf_status st = sf_dataset_generate(cfg.dump().c_str(), &h.ds);
    if (st != SF_OK) return exit_code_for(st);
    st = sf_dataset_save(h.ds, gen_out.c_str());
    if (st != SF_OK) return exit_code_for(st);

    char* meta = nullptr;
    st = sf_dataset_meta(h.ds, &meta);
    if (st != SF_OK) return exit_code_for(st);
    std::filesystem::path meta_path =
        std::filesystem::path(gen_out).replace_extension("");
    std::ofstream(meta_path.string() + "_meta.json") << meta;
    sf_string_free(meta);

    if (!gen_csv.empty()) {
      st = sf_dataset_export_csv(h.ds, gen_csv.c_str());
      if (st != SF_OK) return exit_code_for(st);
    }
    std::printf("wrote %lld x %d samples to %s\n",
                static_cast<long long>(sf_dataset_rows(h.ds)),
                sf_dataset_dim(h.ds), gen_out.c_str());
    return 0;
  }

  if (train->parsed()) {
    json cfg = train_config.empty() ? json::object() : load_config(train_config);
    if (!cfg.contains("train")) cfg["train"] = json::object();
    if (train_steps >= 0) cfg["train"]["steps"] = train_steps;
    if (train_batch >= 0) cfg["train"]["batch_size"] = train_batch;
    if (train_lr >= 0) cfg["train"]["lr_model"] = train_lr;
    if (train_has_seed) cfg["train"]["seed"] = train_seed;
    if (train_snap >= 0) cfg["train"]["snapshot_every"] = train_snap;
    if (!train_weights.empty()) {
      double w[4];
      if (std::sscanf(train_weights.c_str(), "%lf,%lf,%lf,%lf", &w[0], &w[1],
                      &w[2], &w[3]) != 4) {
        std::cerr << "error: --weights expects four comma-separated values\n";
        return 2;
      }
      cfg["train"]["loss_weights"] = {{"alignment", w[0]},
                                      {"resolution", w[1]},
                                      {"uniformity", w[2]},
                                      {"preservation", w[3]}};
    }

    DatasetHandle h;
    sf_status st = sf_dataset_load(train_data.c_str(), &h.ds);
    if (st != SF_OK) return exit_code_for(st);

    int64_t every = 250;
    st = sf_train(h.ds, cfg.dump().c_str(), train_out.c_str(), progress_printer,
                  &every);
    if (st != SF_OK) {
      if (st == SF_ERR_NUMERIC)
        std::cerr << "diagnostic written to " << train_out << "/diagnostic.json\n";
      return exit_code_for(st);
    }
    std::printf("run written to %s\n", train_out.c_str());
    return 0;
  }

  if (eval->parsed()) {
    DatasetHandle h;
    sf_status st = sf_dataset_load(eval_data.c_str(), &h.ds);
    if (st != SF_OK) return exit_code_for(st);

    std::string artifact_dir =
        std::filesystem::path(eval_out).parent_path().string();
    if (artifact_dir.empty()) artifact_dir = ".";
    json opts{{"png", !eval_no_png},
              {"eval_rows", eval_rows},
              {"artifact_dir", artifact_dir}};
    char* report_json = nullptr;
    st = sf_evaluate(eval_run.c_str(), h.ds, opts.dump().c_str(), &report_json);
    if (st != SF_OK) return exit_code_for(st);
    std::ofstream out(eval_out);
    out << report_json;
    if (!out.good()) {
      std::cerr << "error: cannot write " << eval_out << "\n";
      sf_string_free(report_json);
      return 2;
    }
    json rep = json::parse(report_json);
    std::printf("cosine %.4f  rmse %.4f  p* %lld  recon %.4f\n",
                rep["metrics"]["cosine_similarity"].get<double>(),
                rep["metrics"]["rmse"].get<double>(),
                rep["metrics"]["minimal_power"].get<long long>(),
                rep["metrics"]["reconstruction_rmse"].get<double>());
    sf_string_free(report_json);
    return 0;
  }

  if (report->parsed()) {
    std::vector<const char*> paths;
    paths.reserve(report_paths.size());
    for (const auto& p : report_paths) paths.push_back(p.c_str());
    char* table = nullptr;
    sf_status st = sf_report_table(paths.data(), paths.size(),
                                   report_csv ? 1 : 0, &table);
    if (st != SF_OK) return exit_code_for(st);
    if (report_out.empty()) {
      std::fputs(table, stdout);
    } else {
      std::ofstream out(report_out);
      out << table;
      if (!out.good()) {
        std::cerr << "error: cannot write " << report_out << "\n";
        sf_string_free(table);
        return 2;
      }
    }
    sf_string_free(table);
    return 0;
  }
  return 0;
}
