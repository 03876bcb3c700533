/*
 * Copyright 2026 The fagtb Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// The command-line workflows (synth, train, evaluate, sweep, importance) as
// library calls. Every command writes its outputs atomically and leaves a
// `<primary output>.manifest.json` describing the run.

#ifndef FAGTB_COMMANDS_HPP_
#define FAGTB_COMMANDS_HPP_

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fagtb/data.hpp"
#include "fagtb/errors.hpp"
#include "fagtb/metrics.hpp"
#include "fagtb/model.hpp"
#include "fagtb/synthetic.hpp"
#include "fagtb/trainer.hpp"
#include "json.hpp"

namespace fagtb::cli {

namespace fs = std::filesystem;

inline void write_file_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << content;
    out.flush();
    if (!out) throw IoError("write to '" + path.string() + "' failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move output into place at '" + path.string() + "'");
  }
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string dump_json(const nlohmann::json& j) { return j.dump(2) + "\n"; }

// Replaces the extension of `path` (if any) with `suffix`.
inline fs::path sibling(const fs::path& path, const std::string& suffix) {
  fs::path out = path;
  out.replace_extension();
  out += suffix;
  return out;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

struct RunManifest {
  std::string command;
  nlohmann::json config = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::uint64_t content_hash = 0;
  std::vector<std::string> outputs;
  double duration_seconds = 0.0;

  void set_dataset(const Dataset& ds) {
    rows = ds.n;
    cols = ds.p;
    content_hash = ds.fingerprint();
  }

  nlohmann::json to_json() const {
    return {{"command", command},
            {"config", config},
            {"seed", seed},
            {"dataset", {{"rows", rows}, {"cols", cols}, {"content_hash", hex64(content_hash)}}},
            {"outputs", outputs},
            {"duration_seconds", duration_seconds}};
  }

  // Written next to the first output.
  fs::path path() const { return fs::path(outputs.front()).string() + ".manifest.json"; }
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline void finish(RunManifest& manifest, const Stopwatch& clock) {
  manifest.duration_seconds = clock.seconds();
  write_file_atomic(manifest.path(), dump_json(manifest.to_json()));
}

inline TrainConfig load_config(const fs::path& path) {
  const std::string text = read_file(path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config '" + path.string() + "': " + e.what());
  }
  return TrainConfig::from_json(doc);
}

// Schema given explicitly, or `<data stem>.schema.json` next to the data.
inline Dataset load_dataset(const fs::path& data, const std::string& schema_path) {
  const fs::path schema = schema_path.empty() ? sibling(data, ".schema.json") : fs::path(schema_path);
  if (!fs::exists(schema)) {
    throw ArgumentError("no schema for '" + data.string() + "' (looked for '" +
                        schema.string() + "')");
  }
  return load_csv(data.string(), load_schema(schema.string()));
}

inline FagtbModel load_model(const fs::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("model '" + path.string() + "': " + e.what());
  }
  return FagtbModel::from_json(doc);
}

inline void check_feature_names(const FagtbModel& model, const Dataset& ds) {
  if (model.feature_names != ds.feature_names) {
    throw ArgumentError("data feature columns do not match the model's feature_names");
  }
}

// ---------------------------------------------------------------- synth

struct SynthOptions {
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  std::string out;  // dataset CSV; schema and latents are written beside it
  synthetic::GeneratorConfig generator;
  bool write_latents = true;
};

inline RunManifest cmd_synth(const SynthOptions& opt) {
  Stopwatch clock;
  const auto sample = synthetic::generate(opt.n, opt.seed, opt.generator);
  const fs::path out(opt.out);
  const fs::path schema_path = sibling(out, ".schema.json");
  const fs::path latent_path = sibling(out, ".latent.csv");

  std::ostringstream csv;
  write_csv(csv, sample.data);
  write_file_atomic(out, csv.str());
  const ColumnSchema schema = numeric_schema_for(sample.data);
  write_file_atomic(schema_path, dump_json(schema.to_json()));
  // Hash the rounded values that later commands will read back.
  std::istringstream written(csv.str());
  const Dataset reloaded = parse_csv(written, schema);

  RunManifest manifest;
  manifest.command = "synth";
  manifest.seed = opt.seed;
  manifest.config = {{"n", opt.n},
                     {"color_weight", opt.generator.color_weight},
                     {"noise", opt.generator.noise},
                     {"noise_is_variance", opt.generator.noise_is_variance}};
  manifest.set_dataset(reloaded);
  manifest.outputs = {out.string(), schema_path.string()};
  if (opt.write_latents) {
    std::ostringstream lat;
    synthetic::write_latents_csv(lat, sample.latents);
    write_file_atomic(latent_path, lat.str());
    manifest.outputs.push_back(latent_path.string());
  }
  finish(manifest, clock);
  return manifest;
}

// ---------------------------------------------------------------- train

struct TrainOptions {
  std::string data;
  std::string schema;
  std::string config;
  std::string out_model;
  std::string out_trace;
};

inline RunManifest cmd_train(const TrainOptions& opt) {
  Stopwatch clock;
  const TrainConfig config = load_config(opt.config);
  const Dataset ds = load_dataset(opt.data, opt.schema);
  const TrainResult result = train(ds, config);

  write_file_atomic(opt.out_model, dump_json(result.model.to_json()));
  std::ostringstream trace;
  result.trace.write_csv(trace);
  write_file_atomic(opt.out_trace, trace.str());

  RunManifest manifest;
  manifest.command = "train";
  manifest.config = config.to_json();
  manifest.seed = config.seed;
  manifest.set_dataset(ds);
  manifest.outputs = {opt.out_model, opt.out_trace};
  finish(manifest, clock);
  return manifest;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateOptions {
  std::string model;
  std::string data;
  std::string schema;
  std::string out_report;
  std::string out_hist;  // default: <report stem>.hist.csv
  std::size_t bins = 10;
};

inline RunManifest cmd_evaluate(const EvaluateOptions& opt) {
  Stopwatch clock;
  const FagtbModel model = load_model(opt.model);
  const Dataset ds = load_dataset(opt.data, opt.schema);
  check_feature_names(model, ds);

  const auto scores = predict_scores(model, ds);
  const auto preds = classify_scores(scores);
  const FairnessReport report = fairness_report(preds, ds.labels, ds.sensitive);
  nlohmann::json doc = report.to_json();
  doc["mode"] = std::string(to_string(model.mode));
  doc["n"] = ds.n;
  write_file_atomic(opt.out_report, dump_json(doc));

  std::vector<double> proba(scores.size());
  std::transform(scores.begin(), scores.end(), proba.begin(), sigmoid);
  const auto hist = histograms_from_proba(proba, ds.sensitive, opt.bins);
  const std::string hist_path =
      opt.out_hist.empty() ? sibling(opt.out_report, ".hist.csv").string() : opt.out_hist;
  std::ostringstream hcsv;
  hist.write_csv(hcsv);
  write_file_atomic(hist_path, hcsv.str());

  RunManifest manifest;
  manifest.command = "evaluate";
  manifest.config = {{"model", opt.model}, {"bins", opt.bins}};
  manifest.set_dataset(ds);
  manifest.outputs = {opt.out_report, hist_path};
  finish(manifest, clock);
  return manifest;
}

// ---------------------------------------------------------------- sweep

struct SweepOptions {
  std::string data;
  std::string schema;
  std::string config;
  std::vector<double> lambdas;
  std::size_t repeats = 10;
  double test_fraction = 0.2;
  std::string out;
};

struct SweepRow {
  double lambda = 0.0;
  std::vector<FairnessReport> reports;  // one per repeat

  static double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  }
  // Sample standard deviation; 0 for a single repeat.
  static double stddev(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
  }
  std::vector<double> column(double FairnessReport::*field) const {
    std::vector<double> out;
    for (const auto& r : reports) out.push_back(r.*field);
    return out;
  }
};

// Repeat r of every lambda trains with seed config.seed + r on the split
// drawn with that same seed, so all lambdas see identical splits.
inline std::vector<SweepRow> run_sweep(const Dataset& ds, const TrainConfig& base,
                                       std::vector<double> lambdas, std::size_t repeats,
                                       double test_fraction) {
  if (lambdas.empty()) throw ArgumentError("sweep needs at least one lambda");
  if (repeats == 0) throw ArgumentError("sweep needs repeats >= 1");
  for (double l : lambdas) {
    if (!(l >= 0.0)) throw ArgumentError("sweep lambdas must be >= 0");
  }
  std::sort(lambdas.begin(), lambdas.end());
  std::vector<SweepRow> rows;
  for (double lambda : lambdas) {
    SweepRow row;
    row.lambda = lambda;
    for (std::size_t r = 0; r < repeats; ++r) {
      TrainConfig config = base;
      config.lambda = lambda;
      config.seed = base.seed + r;
      const auto [train_set, test_set] = train_test_split(ds, test_fraction, config.seed);
      const TrainResult result = train(train_set, config);
      row.reports.push_back(evaluate(result.model, test_set));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "lambda,repeats,accuracy_mean,accuracy_std,p_rule_mean,p_rule_std,"
         "disparate_impact_mean,d_fpr_mean,d_fnr_mean\n";
  for (const auto& row : rows) {
    const auto acc = row.column(&FairnessReport::accuracy);
    const auto pr = row.column(&FairnessReport::p_rule);
    out << format_real(row.lambda) << ',' << row.reports.size() << ','
        << format_real(SweepRow::mean(acc)) << ',' << format_real(SweepRow::stddev(acc)) << ','
        << format_real(SweepRow::mean(pr)) << ',' << format_real(SweepRow::stddev(pr)) << ','
        << format_real(SweepRow::mean(row.column(&FairnessReport::disparate_impact))) << ','
        << format_real(SweepRow::mean(row.column(&FairnessReport::d_fpr))) << ','
        << format_real(SweepRow::mean(row.column(&FairnessReport::d_fnr))) << '\n';
  }
}

inline RunManifest cmd_sweep(const SweepOptions& opt) {
  Stopwatch clock;
  const TrainConfig config = load_config(opt.config);
  const Dataset ds = load_dataset(opt.data, opt.schema);
  const auto rows = run_sweep(ds, config, opt.lambdas, opt.repeats, opt.test_fraction);
  std::ostringstream csv;
  write_sweep_csv(csv, rows);
  write_file_atomic(opt.out, csv.str());

  RunManifest manifest;
  manifest.command = "sweep";
  manifest.config = config.to_json();
  manifest.config["lambdas"] = opt.lambdas;
  manifest.config["repeats"] = opt.repeats;
  manifest.config["test_fraction"] = opt.test_fraction;
  manifest.seed = config.seed;
  manifest.set_dataset(ds);
  manifest.outputs = {opt.out};
  finish(manifest, clock);
  return manifest;
}

// ---------------------------------------------------------------- importance

struct ImportanceOptions {
  std::string model;
  std::string data;
  std::string schema;
  std::string out;
  std::size_t repeats = 10;
  std::uint64_t seed = 0;
};

inline RunManifest cmd_importance(const ImportanceOptions& opt) {
  Stopwatch clock;
  const FagtbModel model = load_model(opt.model);
  const Dataset ds = load_dataset(opt.data, opt.schema);
  check_feature_names(model, ds);
  std::ostringstream csv;
  csv << "feature,importance\n";
  for (std::size_t j = 0; j < ds.p; ++j) {
    csv << ds.feature_names[j] << ','
        << format_real(permutation_importance(model, ds, j, opt.repeats, opt.seed)) << '\n';
  }
  write_file_atomic(opt.out, csv.str());

  RunManifest manifest;
  manifest.command = "importance";
  manifest.config = {{"model", opt.model}, {"repeats", opt.repeats}};
  manifest.seed = opt.seed;
  manifest.set_dataset(ds);
  manifest.outputs = {opt.out};
  finish(manifest, clock);
  return manifest;
}

}  // namespace fagtb::cli

#endif  // FAGTB_COMMANDS_HPP_
