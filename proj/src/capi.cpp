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

#include "symforge.h"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>

#include <json.hpp>

#include "symforge/config.hpp"
#include "symforge/evaluation.hpp"
#include "symforge/heatmap.hpp"
#include "symforge/io.hpp"
#include "symforge/linalg.hpp"
#include "symforge/trainer.hpp"

using nlohmann::json;

struct sf_dataset {
  symforge::Dataset ds;
};

namespace {

thread_local std::string g_last_error;

sf_status status_of(const symforge::Error& e) {
  switch (e.kind()) {
    case symforge::ErrorKind::Numeric:
      return SF_ERR_NUMERIC;
    case symforge::ErrorKind::Io:
      return SF_ERR_IO;
    default:
      return SF_ERR_CONFIG;
  }
}

template <typename Fn>
sf_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return SF_OK;
  } catch (const symforge::Error& e) {
    g_last_error = e.what();
    return status_of(e);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SF_ERR_CONFIG;
  } catch (...) {
    g_last_error = "unknown error";
    return SF_ERR_CONFIG;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::string run_dir_path(const std::string& dir, const char* name) {
  if (dir.empty() || dir.back() == '/') return dir + name;
  return dir + "/" + name;
}

json read_report(const std::string& path) {
  return json::parse(symforge::read_text_file(path));
}

const char* transform_label(const std::string& t) {
  if (t == "permutation") return "Permuted";
  if (t == "dst1") return "Frequency space";
  return "Translation";
}

}  // namespace

extern "C" {

const char* sf_version(void) { return "symforge 1.0.0"; }

const char* sf_last_error(void) { return g_last_error.c_str(); }

sf_status sf_dataset_generate(const char* config_json, sf_dataset** out) {
  return guarded([&] {
    symforge::require(config_json && out, symforge::ErrorKind::Config,
                      "sf_dataset_generate: null argument");
    symforge::RunConfig cfg = symforge::parse_run_config(config_json);
    auto handle = std::make_unique<sf_dataset>();
    handle->ds = symforge::build_dataset(cfg.dataset);
    *out = handle.release();
  });
}

sf_status sf_dataset_load(const char* path, sf_dataset** out) {
  return guarded([&] {
    symforge::require(path && out, symforge::ErrorKind::Config,
                      "sf_dataset_load: null argument");
    auto handle = std::make_unique<sf_dataset>();
    handle->ds = symforge::load_dataset(path);
    *out = handle.release();
  });
}

sf_status sf_dataset_save(const sf_dataset* ds, const char* path) {
  return guarded([&] {
    symforge::require(ds && path, symforge::ErrorKind::Config,
                      "sf_dataset_save: null argument");
    symforge::save_dataset(path, ds->ds);
  });
}

sf_status sf_dataset_export_csv(const sf_dataset* ds, const char* path) {
  return guarded([&] {
    symforge::require(ds && path, symforge::ErrorKind::Config,
                      "sf_dataset_export_csv: null argument");
    symforge::export_dataset_csv(path, ds->ds);
  });
}

int64_t sf_dataset_rows(const sf_dataset* ds) { return ds ? ds->ds.x.rows() : 0; }

int32_t sf_dataset_dim(const sf_dataset* ds) {
  return ds ? static_cast<int32_t>(ds->ds.x.cols()) : 0;
}

sf_status sf_dataset_meta(const sf_dataset* ds, char** json_out) {
  return guarded([&] {
    symforge::require(ds && json_out, symforge::ErrorKind::Config,
                      "sf_dataset_meta: null argument");
    *json_out = dup_string(symforge::dataset_meta_json(ds->ds));
  });
}

void sf_dataset_free(sf_dataset* ds) { delete ds; }

sf_status sf_train(const sf_dataset* ds, const char* config_json,
                   const char* run_dir, sf_train_progress progress, void* user) {
  return guarded([&] {
    symforge::require(ds && config_json && run_dir, symforge::ErrorKind::Config,
                      "sf_train: null argument");
    symforge::RunConfig cfg = symforge::parse_run_config(config_json);
    std::string dir(run_dir);
    symforge::make_directories(dir);
    symforge::make_directories(run_dir_path(dir, "snapshots"));
    symforge::write_text_file(run_dir_path(dir, "resolved_config.json"),
                              symforge::resolved_config_json(cfg));

    symforge::ProgressFn cb;
    if (progress) {
      cb = [&](int64_t step, int64_t total, const symforge::LossBreakdown& parts) {
        progress(step, total, parts.total, user);
      };
    }

    symforge::TrainResult result;
    try {
      result = symforge::train(cfg.train, ds->ds, cb);
    } catch (const symforge::TrainAbort& abort) {
      symforge::write_text_file(run_dir_path(dir, "diagnostic.json"),
                                abort.diagnostics());
      throw;
    }

    symforge::save_checkpoint(run_dir_path(dir, "checkpoint.bin"), result.model,
                              result.marginal, result.conditional,
                              result.total_steps);

    std::string log_csv = "step,alignment,resolution,uniformity,preservation,"
                          "total,k,t_n,lr,marginal_nll,conditional_nll\n";
    char line[384];
    for (const auto& row : result.log) {
      std::snprintf(line, sizeof(line),
                    "%lld,%.9g,%.9g,%.9g,%.9g,%.9g,%lld,%.9g,%.9g,%.9g,%.9g\n",
                    static_cast<long long>(row.step), row.alignment,
                    row.resolution, row.uniformity, row.preservation, row.total,
                    static_cast<long long>(row.k), row.t_n, row.lr,
                    row.marginal_nll, row.conditional_nll);
      log_csv += line;
    }
    symforge::write_text_file(run_dir_path(dir, "training_log.csv"), log_csv);

    for (const auto& snap : result.snapshots) {
      std::string stem = run_dir_path(dir, "snapshots/step_") +
                         std::to_string(snap.step);
      symforge::write_matrix_csv(stem + "_generator.csv", snap.generator);
      symforge::write_matrix_csv(stem + "_groupconv.csv", snap.l);
    }
  });
}

sf_status sf_evaluate(const char* run_dir, const sf_dataset* ds,
                      const char* options_json, char** report_json_out) {
  return guarded([&] {
    symforge::require(run_dir && ds && report_json_out,
                      symforge::ErrorKind::Config, "sf_evaluate: null argument");
    bool png = true;
    int64_t eval_rows = 0;
    std::string artifact_dir;
    if (options_json && *options_json) {
      json opts = json::parse(options_json, nullptr, false);
      symforge::require(!opts.is_discarded(), symforge::ErrorKind::Config,
                        "sf_evaluate: invalid options JSON");
      png = opts.value("png", true);
      eval_rows = opts.value("eval_rows", static_cast<int64_t>(0));
      artifact_dir = opts.value("artifact_dir", std::string());
    }

    std::string ck_path = run_dir_path(run_dir, "checkpoint.bin");
    symforge::require(symforge::file_exists(ck_path), symforge::ErrorKind::Io,
                      "missing checkpoint: " + ck_path);
    symforge::Checkpoint ck = symforge::load_checkpoint(ck_path);
    symforge::EvalReport report =
        symforge::evaluate_model(ck.model, ds->ds, eval_rows);

    json meta = json::parse(symforge::dataset_meta_json(ds->ds));
    json out{{"dataset",
              {{"signal", meta.at("signal")},
               {"transform", meta.at("transform")},
               {"n", meta.at("n")},
               {"d", meta.at("d")},
               {"seed", meta.at("seed")},
               {"noise_sigma", meta.at("noise_sigma")}}},
             {"checkpoint_step", ck.step},
             {"metrics",
              {{"cosine_similarity", report.cosine_similarity},
               {"rmse", report.rmse},
               {"orientation", report.orientation},
               {"sign", report.sign},
               {"minimal_power", report.minimal_power},
               {"equivariance_residual", report.equivariance_residual},
               {"reconstruction_rmse", report.reconstruction_rmse}}},
             {"markov_profile", report.markov_profile}};

    if (!artifact_dir.empty()) {
      symforge::make_directories(artifact_dir);
      symforge::Matrix learned =
          symforge::central_crop(symforge::make_generator(ck.model), ck.model.d);
      symforge::GeneratorAlignment align =
          symforge::best_alignment(learned, ds->ds.ideal_generator);
      symforge::Matrix diff = align.oriented;
      symforge::axpy(-1.0, ds->ds.ideal_generator, diff);

      auto art = [&](const char* name) { return run_dir_path(artifact_dir, name); };
      symforge::write_matrix_csv(art("generator_learned.csv"), align.oriented);
      symforge::write_matrix_csv(art("generator_ideal.csv"), ds->ds.ideal_generator);
      symforge::write_matrix_csv(art("generator_error.csv"), diff);
      if (png) {
        double scale = std::max(symforge::max_abs(align.oriented),
                                symforge::max_abs(ds->ds.ideal_generator));
        symforge::write_heatmap_png(art("generator_learned.png"), align.oriented, scale);
        symforge::write_heatmap_png(art("generator_ideal.png"), ds->ds.ideal_generator, scale);
        symforge::write_heatmap_png(art("generator_error.png"), diff, scale);
      }
    }
    *report_json_out = dup_string(out.dump(2));
  });
}

sf_status sf_report_table(const char* const* report_paths, size_t count,
                          int as_csv, char** table_out) {
  return guarded([&] {
    symforge::require(table_out, symforge::ErrorKind::Config,
                      "sf_report_table: null output");
    // cell[transform][signal] -> formatted metrics
    const char* transforms[3] = {"identity", "permutation", "dst1"};
    const char* signals[2] = {"gaussian", "legendre"};
    std::string cells[3][2];
    for (size_t idx = 0; idx < count; ++idx) {
      json rep;
      try {
        rep = read_report(report_paths[idx]);
      } catch (...) {
        continue;  // missing runs are nonfatal
      }
      std::string tr = rep.at("dataset").at("transform").get<std::string>();
      std::string sig = rep.at("dataset").at("signal").get<std::string>();
      char buf[128];
      std::snprintf(buf, sizeof(buf), "cos %.3f / rmse %.3f",
                    rep.at("metrics").at("cosine_similarity").get<double>(),
                    rep.at("metrics").at("rmse").get<double>());
      for (int t = 0; t < 3; ++t)
        for (int s = 0; s < 2; ++s)
          if (tr == transforms[t] && sig == signals[s]) cells[t][s] = buf;
    }

    std::string out;
    if (as_csv) {
      out = "symmetry,gaussian,legendre\n";
      for (int t = 0; t < 3; ++t) {
        out += transform_label(transforms[t]);
        for (int s = 0; s < 2; ++s) {
          out += ',';
          out += cells[t][s];
        }
        out += '\n';
      }
    } else {
      out = "| Symmetry | Gaussian dataset | Legendre dataset |\n";
      out += "|---|---|---|\n";
      for (int t = 0; t < 3; ++t) {
        out += "| ";
        out += transform_label(transforms[t]);
        for (int s = 0; s < 2; ++s) {
          out += " | ";
          out += cells[t][s].empty() ? "-" : cells[t][s];
        }
        out += " |\n";
      }
    }
    *table_out = dup_string(out);
  });
}

void sf_string_free(char* s) { std::free(s); }

}  // extern "C"
