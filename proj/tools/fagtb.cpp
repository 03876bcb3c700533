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

// fagtb: synth | train | evaluate | sweep | importance
// Exit codes: 0 success, 1 runtime/training error, 2 usage/config error.

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fagtb/commands.hpp"

namespace {

std::vector<double> parse_lambdas(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto v = fagtb::detail::parse_real(fagtb::detail::trim(item));
    if (!v) throw fagtb::ArgumentError("bad lambda value '" + item + "'");
    out.push_back(*v);
  }
  return out;
}

void print_report(const std::string& path) {
  const auto doc = nlohmann::json::parse(fagtb::cli::read_file(path));
  auto pct = [](const nlohmann::json& v) {
    return v.is_null() ? std::string("n/a") : fagtb::format_real(100.0 * v.get<double>()) + "%";
  };
  std::cout << "accuracy " << pct(doc["accuracy"]) << ", p-rule " << pct(doc["p_rule"])
            << ", d_fpr " << pct(doc["d_fpr"]) << ", d_fnr " << pct(doc["d_fnr"]) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fair adversarial gradient tree boosting"};
  app.require_subcommand(1);

  fagtb::cli::SynthOptions synth;
  double noise_std = -1.0;
  auto* synth_cmd = app.add_subcommand("synth", "Generate the synthetic car-insurance dataset");
  synth_cmd->add_option("--n", synth.n, "Number of rows")->required();
  synth_cmd->add_option("--seed", synth.seed, "Random seed");
  synth_cmd->add_option("--out", synth.out, "Output CSV path")->required();
  synth_cmd->add_option("--color-weight", synth.generator.color_weight,
                        "Weight of gender in the color threshold");
  synth_cmd->add_option("--noise-var", synth.generator.noise, "Label noise variance");
  synth_cmd->add_option("--noise-std", noise_std, "Label noise standard deviation (overrides --noise-var)");
  synth_cmd->add_flag("!--no-latents", synth.write_latents, "Skip the latent-columns CSV");

  fagtb::cli::TrainOptions train;
  auto* train_cmd = app.add_subcommand("train", "Train a model");
  train_cmd->add_option("--data", train.data)->required();
  train_cmd->add_option("--schema", train.schema, "Schema JSON (default <data>.schema.json)");
  train_cmd->add_option("--config", train.config)->required();
  train_cmd->add_option("--out-model", train.out_model)->required();
  train_cmd->add_option("--out-trace", train.out_trace)->required();

  fagtb::cli::EvaluateOptions eval;
  auto* eval_cmd = app.add_subcommand("evaluate", "Accuracy and fairness report");
  eval_cmd->add_option("--model", eval.model)->required();
  eval_cmd->add_option("--data", eval.data)->required();
  eval_cmd->add_option("--schema", eval.schema);
  eval_cmd->add_option("--out-report", eval.out_report)->required();
  eval_cmd->add_option("--out-hist", eval.out_hist, "Histogram CSV (default <report>.hist.csv)");
  eval_cmd->add_option("--bins", eval.bins);

  fagtb::cli::SweepOptions sweep;
  std::string lambdas;
  auto* sweep_cmd = app.add_subcommand("sweep", "Accuracy/fairness over a lambda grid");
  sweep_cmd->add_option("--data", sweep.data)->required();
  sweep_cmd->add_option("--schema", sweep.schema);
  sweep_cmd->add_option("--config", sweep.config)->required();
  sweep_cmd->add_option("--lambdas", lambdas, "Comma-separated lambda values")->required();
  sweep_cmd->add_option("--repeats", sweep.repeats);
  sweep_cmd->add_option("--test-fraction", sweep.test_fraction);
  sweep_cmd->add_option("--out", sweep.out)->required();

  fagtb::cli::ImportanceOptions imp;
  auto* imp_cmd = app.add_subcommand("importance", "Permutation feature importance");
  imp_cmd->add_option("--model", imp.model)->required();
  imp_cmd->add_option("--data", imp.data)->required();
  imp_cmd->add_option("--schema", imp.schema);
  imp_cmd->add_option("--out", imp.out)->required();
  imp_cmd->add_option("--repeats", imp.repeats);
  imp_cmd->add_option("--seed", imp.seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*synth_cmd) {
      if (noise_std >= 0.0) {
        synth.generator.noise = noise_std;
        synth.generator.noise_is_variance = false;
      }
      fagtb::cli::cmd_synth(synth);
    } else if (*train_cmd) {
      fagtb::cli::cmd_train(train);
    } else if (*eval_cmd) {
      fagtb::cli::cmd_evaluate(eval);
      print_report(eval.out_report);
    } else if (*sweep_cmd) {
      sweep.lambdas = parse_lambdas(lambdas);
      fagtb::cli::cmd_sweep(sweep);
    } else if (*imp_cmd) {
      fagtb::cli::cmd_importance(imp);
    }
  } catch (const fagtb::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const fagtb::SchemaError& e) {
    std::cerr << "schema error: " << e.what() << '\n';
    return 2;
  } catch (const fagtb::ArgumentError& e) {
    std::cerr << "argument error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
