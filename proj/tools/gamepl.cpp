// Copyright 2026 The gamepl Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// gamepl: command-line front end.
//
//   gamepl gen    --out data.csv [generator flags]
//   gamepl train  --data data.csv --setting fspl|sspl:<p>|full --loss <name> --out-dir DIR
//   gamepl sweep  --data data.csv --settings a,b --losses x,y --seeds 1,2 --out results.csv
//   gamepl eval   --model model.json [--pseudo pseudo.csv] --data data.csv
//
// Exit codes: 0 success, 2 usage, 3 numerical failure, 4 I/O.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gamepl/classifier.hpp"
#include "gamepl/data.hpp"
#include "gamepl/evaluation.hpp"
#include "gamepl/game_trainer.hpp"
#include "gamepl/pseudo_player.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

enum ExitCode { kOk = 0, kUsage = 2, kNumeric = 3, kIo = 4 };

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Option parsing helpers

struct Setting {
  enum Kind { Full, Fspl, Sspl } kind = Fspl;
  double fraction = 1.0;
  std::string text = "fspl";
};

Setting parse_setting(const std::string& s) {
  Setting out;
  out.text = s;
  if (s == "full") {
    out.kind = Setting::Full;
  } else if (s == "fspl") {
    out.kind = Setting::Fspl;
  } else if (s.starts_with("sspl:")) {
    out.kind = Setting::Sspl;
    try {
      std::size_t used = 0;
      out.fraction = std::stod(s.substr(5), &used);
      if (used != s.size() - 5) throw std::invalid_argument(s);
    } catch (const std::exception&) {
      throw UsageError("bad setting '" + s + "'");
    }
    if (!(out.fraction > 0.0 && out.fraction <= 1.0))
      throw UsageError("sspl fraction must lie in (0, 1]: '" + s + "'");
  } else {
    throw UsageError("unknown setting '" + s + "' (expected fspl, sspl:<p> or full)");
  }
  return out;
}

gamepl::LossKind parse_loss(const std::string& s) {
  using gamepl::LossKind;
  for (LossKind k : {LossKind::G2NetPL, LossKind::BceFull, LossKind::An, LossKind::AnLs,
                     LossKind::Wan, LossKind::Epr})
    if (gamepl::to_string(k) == s) return k;
  throw UsageError("unknown loss '" + s + "'");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

gamepl::PartialDataset apply_setting(const gamepl::PartialDataset& ds, const Setting& s,
                                     std::uint64_t seed) {
  switch (s.kind) {
    case Setting::Full: {
      gamepl::PartialDataset out = ds;
      out.mask = gamepl::full_mask(ds.ground_truth);
      return out;
    }
    case Setting::Fspl: return gamepl::mask_fspl(ds, seed);
    case Setting::Sspl: return gamepl::mask_sspl(ds, s.fraction, seed);
  }
  return ds;
}

// Flags shared by `train` and `sweep`. String-valued enums are resolved after
// parsing.
struct TrainFlags {
  gamepl::TrainConfig cfg;
  std::string arch = "linear";
  std::string mapping = "gaussian-cdf";
  std::string ace = "additive";
  std::string mode = "end-to-end";
  bool run_all_epochs = false;
  bool timing = false;
};

void add_train_flags(CLI::App* app, TrainFlags& f) {
  auto& c = f.cfg;
  app->add_option("--epochs", c.epochs, "Training epochs")->capture_default_str();
  app->add_option("--batch-size", c.batch_size, "Mini-batch size")->capture_default_str();
  app->add_option("--lr", c.lr, "Network learning rate")->capture_default_str();
  app->add_option("--lr-decay", c.lr_decay, "Per-epoch geometric lr decay")->capture_default_str();
  app->add_option("--momentum", c.momentum, "SGD momentum")->capture_default_str();
  app->add_option("--arch", f.arch, "linear | mlp")->capture_default_str();
  app->add_option("--hidden", c.hidden_dim, "Hidden width for mlp")->capture_default_str();
  app->add_option("--mapping", f.mapping, "gaussian-cdf | sigmoid")->capture_default_str();
  app->add_option("--sigma", c.mapping.sigma, "Gaussian CDF spread")->capture_default_str();
  app->add_option("--lambda-max", c.lambda.lambda_max, "Peak pseudo-label penalty weight")
      ->capture_default_str();
  app->add_option("--lambda-width", c.lambda.width, "Spread of the penalty weight")
      ->capture_default_str();
  app->add_option("--ace", f.ace, "additive | exponential")->capture_default_str();
  app->add_option("--eta-u", c.eta_u, "Pseudo-label step size")->capture_default_str();
  app->add_option("--pseudo-steps", c.pseudo_steps, "Pseudo-label steps per batch")
      ->capture_default_str();
  app->add_flag("--pseudo-full-solve", c.pseudo_full_solve, "Solve each pseudo entry exactly");
  app->add_flag("--end-of-epoch-pass", c.end_of_epoch_pass,
                "Extra full-set pseudo-label update after each epoch");
  app->add_option("--beta", c.beta, "Scheduler confidence share")->capture_default_str();
  app->add_option("--gamma", c.gamma, "Scheduler gamma")->capture_default_str();
  app->add_option("--reg-k", c.reg.expected_positives, "Expected positives per image")
      ->capture_default_str();
  app->add_option("--reg-weight", c.reg.weight, "Positives regularizer weight")
      ->capture_default_str();
  app->add_option("--ls-eps", c.ls_eps, "Label smoothing for an-ls")->capture_default_str();
  app->add_option("--mode", f.mode, "end-to-end | linear-init")->capture_default_str();
  app->add_option("--phase1-epochs", c.phase1_epochs, "linear-init: last-layer-only epochs")
      ->capture_default_str();
  app->add_option("--tolerance", c.tolerance, "Nash residual tolerance")->capture_default_str();
  app->add_option("--patience", c.patience, "Epochs below tolerance to converge")
      ->capture_default_str();
  app->add_option("--divergence-factor", c.divergence_factor,
                  "Abort when the loss exceeds this multiple of its starting value")
      ->capture_default_str();
  app->add_flag("--run-all-epochs", f.run_all_epochs, "Do not stop at convergence");
  app->add_option("--workers", c.workers, "Worker threads inside one run")->capture_default_str();
  app->add_flag("--timing", f.timing, "Record wall time in metrics.json");
}

gamepl::TrainConfig resolve(const TrainFlags& f) {
  gamepl::TrainConfig c = f.cfg;
  if (f.arch == "linear") c.arch = gamepl::Arch::Linear;
  else if (f.arch == "mlp") c.arch = gamepl::Arch::Mlp;
  else throw UsageError("unknown arch '" + f.arch + "'");
  if (f.mapping == "gaussian-cdf") c.mapping.kind = gamepl::MappingKind::GaussianCdf;
  else if (f.mapping == "sigmoid") c.mapping.kind = gamepl::MappingKind::Sigmoid;
  else throw UsageError("unknown mapping '" + f.mapping + "'");
  if (f.ace == "additive") c.ace_variant = gamepl::AceVariant::Additive;
  else if (f.ace == "exponential") c.ace_variant = gamepl::AceVariant::Exponential;
  else throw UsageError("unknown ace variant '" + f.ace + "'");
  if (f.mode == "end-to-end") c.mode = gamepl::TrainingMode::EndToEnd;
  else if (f.mode == "linear-init") c.mode = gamepl::TrainingMode::LinearInit;
  else throw UsageError("unknown mode '" + f.mode + "'");
  c.stop_on_convergence = !f.run_all_epochs;
  try {
    c.validate();
  } catch (const gamepl::ArgumentError& e) {
    throw UsageError(e.what());
  }
  return c;
}

// `key=value` lines of every option, defaults included.
json config_object(const CLI::App* app) {
  json out = json::object();
  std::istringstream in(app->config_to_str(true, false));
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (line.empty() || line[0] == '#' || line[0] == '[' || eq == std::string::npos) continue;
    std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    auto trim = [](std::string& s) {
      s.erase(0, s.find_first_not_of(" \t"));
      s.erase(s.find_last_not_of(" \t") + 1);
    };
    trim(key);
    trim(value);
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
      value = value.substr(1, value.size() - 2);
    if (key == "config") continue;
    out[key] = value;
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw gamepl::IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw gamepl::IoError("write failed: " + path.string());
}

void write_config_file(const fs::path& path, const json& cfg) {
  std::string text;
  for (const auto& [k, v] : cfg.items()) text += k + "=" + v.get<std::string>() + "\n";
  write_text(path, text);
}

json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// ---------------------------------------------------------------------------
// train

struct RunSpec {
  std::string data_path;
  Setting setting;
  gamepl::LossKind loss = gamepl::LossKind::G2NetPL;
  gamepl::TrainConfig cfg;
  fs::path out_dir;
  bool timing = false;
};

json run_training(const gamepl::PartialDataset& raw, const RunSpec& spec) {
  if (spec.loss == gamepl::LossKind::BceFull && spec.setting.kind != Setting::Full)
    throw UsageError("loss bce needs fully observed labels; use --setting full");
  const auto start = std::chrono::steady_clock::now();
  const gamepl::PartialDataset ds = apply_setting(raw, spec.setting, spec.cfg.seed);
  gamepl::TrainConfig cfg = spec.cfg;
  cfg.loss = spec.loss;
  const gamepl::TrainResult res = gamepl::train(ds, cfg);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  fs::create_directories(spec.out_dir);
  gamepl::save_model(res.model, (spec.out_dir / "model.json").string());
  if (res.pseudo) gamepl::save_pseudo_csv(*res.pseudo, (spec.out_dir / "pseudo.csv").string());
  gamepl::export_traces(res.traces, (spec.out_dir / "trace.csv").string());

  const auto& last = res.traces.back();
  double best = -1.0;
  int best_epoch = 0;
  for (const auto& t : res.traces)
    if (std::isfinite(t.map_test) && t.map_test > best) {
      best = t.map_test;
      best_epoch = t.epoch;
    }
  json m;
  m["map_test_final"] = nullable(last.map_test);
  m["map_test_best"] = best_epoch ? json(best) : json(nullptr);
  m["best_epoch"] = best_epoch ? json(best_epoch) : json(nullptr);
  m["pseudo_map"] = res.pseudo ? nullable(last.pseudo_map) : json(nullptr);
  m["converged_epoch"] = res.converged_epoch > 0 ? json(res.converged_epoch) : json(nullptr);
  m["wall_seconds"] = spec.timing ? json(wall) : json(nullptr);
  write_text(spec.out_dir / "metrics.json", m.dump(2) + "\n");
  return m;
}

void write_manifest(const fs::path& path, const std::string& command, const json& config,
                    const std::string& data_path, std::uint64_t seed, const json& artifacts,
                    double wall) {
  json man;
  man["command"] = command;
  man["resolved_config"] = config;
  man["dataset"] = data_path;
  man["dataset_fingerprint"] = gamepl::file_fingerprint(data_path);
  man["seed"] = seed;
  man["artifacts"] = artifacts;
  man["timing"] = {{"wall_seconds", wall}};
  write_text(path, man.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// sweep

struct SweepRow {
  std::string setting, loss;
  std::uint64_t seed = 0;
  std::string status = "ok";
  double map_final = NAN, map_best = NAN, pseudo_map = NAN;
  int converged = -1;
};

std::string fmt9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

double json_num(const json& j) { return j.is_number() ? j.get<double>() : NAN; }

std::string sanitize(std::string s) {
  for (char& ch : s)
    if (ch == ':' || ch == '/') ch = '-';
  return s;
}

// Inserts the `key=value` lines of a `--config FILE` right after the
// subcommand name, so explicit flags (parsed later, last one wins) override them.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string file;
  for (std::size_t k = 0; k < args.size(); ++k) {
    if (args[k] == "--config" && k + 1 < args.size()) file = args[k + 1];
    else if (args[k].starts_with("--config=")) file = args[k].substr(9);
  }
  if (file.empty() || args.empty()) return args;
  if (!fs::is_regular_file(file)) throw gamepl::IoError("cannot open config file " + file);
  std::vector<std::string> injected;
  for (const auto& item : CLI::ConfigINI().from_file(file)) {
    if (item.name == "++" || item.name == "--" || !item.parents.empty()) continue;
    if (item.name == "config") continue;
    std::string value;
    for (const auto& v : item.inputs) value += (value.empty() ? "" : ",") + v;
    injected.push_back("--" + item.name + "=" + value);
  }
  args.insert(args.begin() + 1, injected.begin(), injected.end());
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-player game training for multi-label classification from partial labels"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  // gen
  gamepl::SyntheticSpec gen_spec;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen", "Generate a synthetic multi-label dataset");
  gen->add_option("--classes", gen_spec.num_classes, "Number of classes L")->capture_default_str();
  gen->add_option("--dim", gen_spec.input_dim, "Feature dimension")->capture_default_str();
  gen->add_option("--train", gen_spec.n_train, "Train samples")->capture_default_str();
  gen->add_option("--test", gen_spec.n_test, "Test samples")->capture_default_str();
  gen->add_option("--separation", gen_spec.separation, "Class prototype norm")
      ->capture_default_str();
  gen->add_option("--feature-noise", gen_spec.feature_noise, "Feature noise std-dev")
      ->capture_default_str();
  gen->add_option("--label-noise", gen_spec.label_noise, "Label flip probability")
      ->capture_default_str();
  gen->add_option("--mean-positives", gen_spec.mean_positives, "Mean positives per sample")
      ->capture_default_str();
  gen->add_option("--seed", gen_seed, "RNG seed")->capture_default_str();
  gen->add_option("--out", gen_out, "Output dataset CSV")->required();

  // train
  TrainFlags train_flags;
  std::string train_data, train_setting = "fspl", train_loss = "g2netpl", train_out;
  std::uint64_t train_seed = 0;
  auto* train = app.add_subcommand("train", "Train one model");
  train->add_option("--config", "Flat key=value config file; explicit flags take precedence");
  train->add_option("--data", train_data, "Dataset CSV")->required();
  train->add_option("--setting", train_setting, "fspl | sspl:<p> | full")->capture_default_str();
  train->add_option("--loss", train_loss, "g2netpl | an | an-ls | wan | epr | bce")
      ->capture_default_str();
  train->add_option("--seed", train_seed, "Seed for masking and initialization")
      ->capture_default_str();
  train->add_option("--out-dir", train_out, "Output directory")->required();
  add_train_flags(train, train_flags);

  // sweep
  TrainFlags sweep_flags;
  std::string sweep_data, sweep_settings, sweep_losses, sweep_seeds, sweep_out;
  int sweep_jobs = 1;
  auto* sweep = app.add_subcommand("sweep", "Cross product of settings x losses x seeds");
  sweep->add_option("--config", "Flat key=value config file; explicit flags take precedence");
  sweep->add_option("--data", sweep_data, "Dataset CSV")->required();
  sweep->add_option("--settings", sweep_settings, "Comma-separated settings")->required();
  sweep->add_option("--losses", sweep_losses, "Comma-separated losses")->required();
  sweep->add_option("--seeds", sweep_seeds, "Comma-separated seeds")->required();
  sweep->add_option("--out", sweep_out, "Results CSV")->required();
  sweep->add_option("--jobs", sweep_jobs, "Concurrent runs")->capture_default_str();
  add_train_flags(sweep, sweep_flags);

  // eval
  std::string eval_model, eval_pseudo, eval_data, eval_out;
  auto* eval = app.add_subcommand("eval", "Score a checkpoint on a dataset");
  eval->add_option("--model", eval_model, "Model checkpoint JSON")->required();
  eval->add_option("--pseudo", eval_pseudo, "Pseudo-label checkpoint CSV");
  eval->add_option("--data", eval_data, "Dataset CSV")->required();
  eval->add_option("--out", eval_out, "Also write the metrics JSON here");

  try {
    std::vector<std::string> args;
    try {
      args = expand_config(argc, argv);
    } catch (const std::exception& e) {
      std::cerr << "i/o error: " << e.what() << "\n";
      return kIo;
    }
    std::reverse(args.begin(), args.end());
    app.parse(std::move(args));
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  try {
    if (*gen) {
      try {
        gen_spec.validate();
      } catch (const gamepl::ArgumentError& e) {
        throw UsageError(e.what());
      }
      const auto ds = gamepl::gen_synthetic(gen_spec, gen_seed);
      gamepl::save_dataset(ds, gen_out);
      write_manifest(gen_out + ".manifest.json", "gen", config_object(gen), gen_out, gen_seed,
                     {{"dataset", gen_out}}, elapsed());
      return kOk;
    }

    if (*train) {
      RunSpec spec;
      spec.data_path = train_data;
      spec.setting = parse_setting(train_setting);
      spec.loss = parse_loss(train_loss);
      spec.cfg = resolve(train_flags);
      spec.cfg.seed = train_seed;
      spec.out_dir = train_out;
      spec.timing = train_flags.timing;
      const auto raw = gamepl::load_dataset(train_data);
      const json metrics = run_training(raw, spec);
      const json cfg = config_object(train);
      write_config_file(spec.out_dir / "config.cfg", cfg);
      json artifacts = {{"model", (spec.out_dir / "model.json").string()},
                        {"trace", (spec.out_dir / "trace.csv").string()},
                        {"metrics", (spec.out_dir / "metrics.json").string()},
                        {"config", (spec.out_dir / "config.cfg").string()}};
      if (spec.loss == gamepl::LossKind::G2NetPL)
        artifacts["pseudo"] = (spec.out_dir / "pseudo.csv").string();
      write_manifest(spec.out_dir / "manifest.json", "train", cfg, train_data, train_seed,
                     artifacts, elapsed());
      std::cout << metrics.dump(2) << "\n";
      return kOk;
    }

    if (*sweep) {
      const auto settings = split_list(sweep_settings);
      const auto losses = split_list(sweep_losses);
      const auto seed_text = split_list(sweep_seeds);
      if (settings.empty() || losses.empty() || seed_text.empty())
        throw UsageError("sweep needs non-empty --settings, --losses and --seeds");
      if (sweep_jobs < 1) throw UsageError("--jobs must be >= 1");
      std::vector<std::uint64_t> seeds;
      for (const auto& s : seed_text) {
        try {
          seeds.push_back(std::stoull(s));
        } catch (const std::exception&) {
          throw UsageError("bad seed '" + s + "'");
        }
      }
      for (const auto& s : settings) parse_setting(s);
      for (const auto& l : losses) parse_loss(l);
      const gamepl::TrainConfig base = resolve(sweep_flags);
      const auto raw = gamepl::load_dataset(sweep_data);
      const fs::path runs_dir = sweep_out + ".runs";

      std::vector<SweepRow> rows;
      for (const auto& s : settings)
        for (const auto& l : losses)
          for (auto seed : seeds) rows.push_back({s, l, seed});

      std::atomic<std::size_t> next{0};
      auto worker = [&] {
        for (std::size_t k = next++; k < rows.size(); k = next++) {
          SweepRow& row = rows[k];
          try {
            RunSpec spec;
            spec.setting = parse_setting(row.setting);
            spec.loss = parse_loss(row.loss);
            spec.cfg = base;
            spec.cfg.seed = row.seed;
            spec.out_dir = runs_dir / (sanitize(row.setting) + "__" + row.loss + "__s" +
                                       std::to_string(row.seed));
            spec.timing = sweep_flags.timing;
            const json m = run_training(raw, spec);
            row.map_final = json_num(m["map_test_final"]);
            row.map_best = json_num(m["map_test_best"]);
            row.pseudo_map = json_num(m["pseudo_map"]);
            row.converged = m["converged_epoch"].is_number() ? m["converged_epoch"].get<int>() : -1;
          } catch (const std::exception& e) {
            std::string msg = e.what();
            std::replace(msg.begin(), msg.end(), ',', ';');
            std::replace(msg.begin(), msg.end(), '\n', ' ');
            row.status = "error: " + msg;
          }
        }
      };
      {
        std::vector<std::jthread> pool;
        const int n = std::min<int>(sweep_jobs, static_cast<int>(rows.size()));
        for (int w = 0; w < n; ++w) pool.emplace_back(worker);
      }

      std::string table =
          "setting,loss,seed,status,map_test_final,map_test_best,pseudo_map,converged_epoch\n";
      for (const auto& r : rows)
        table += r.setting + "," + r.loss + "," + std::to_string(r.seed) + "," + r.status + "," +
                 fmt9(r.map_final) + "," + fmt9(r.map_best) + "," + fmt9(r.pseudo_map) + "," +
                 (r.converged > 0 ? std::to_string(r.converged) : std::string()) + "\n";
      write_text(sweep_out, table);

      // mean and sample std-dev per (setting, loss) cell over successful runs
      std::string summary =
          "setting,loss,runs,map_test_final_mean,map_test_final_std,map_test_best_mean,"
          "map_test_best_std\n";
      for (const auto& s : settings) {
        for (const auto& l : losses) {
          std::vector<double> fin, best;
          for (const auto& r : rows)
            if (r.setting == s && r.loss == l && r.status == "ok") {
              fin.push_back(r.map_final);
              best.push_back(r.map_best);
            }
          auto stats = [](const std::vector<double>& v) {
            if (v.empty()) return std::pair{std::nan(""), std::nan("")};
            double mean = 0.0;
            for (double x : v) mean += x;
            mean /= static_cast<double>(v.size());
            double ss = 0.0;
            for (double x : v) ss += (x - mean) * (x - mean);
            return std::pair{mean, v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1))
                                                : 0.0};
          };
          const auto [fm, fsd] = stats(fin);
          const auto [bm, bsd] = stats(best);
          summary += s + "," + l + "," + std::to_string(fin.size()) + "," + fmt9(fm) + "," +
                     fmt9(fsd) + "," + fmt9(bm) + "," + fmt9(bsd) + "\n";
        }
      }
      const fs::path out_path(sweep_out);
      const fs::path summary_path =
          out_path.parent_path() / (out_path.stem().string() + ".summary.csv");
      write_text(summary_path, summary);
      write_manifest(sweep_out + ".manifest.json", "sweep", config_object(sweep), sweep_data, 0,
                     {{"results", sweep_out}, {"summary", summary_path.string()},
                      {"runs", runs_dir.string()}},
                     elapsed());
      return kOk;
    }

    if (*eval) {
      const auto model = gamepl::load_model(eval_model);
      const auto ds = gamepl::load_dataset(eval_data);
      if (model.input_dim != ds.input_dim() || model.num_classes != ds.num_classes())
        throw UsageError("checkpoint expects input_dim " + std::to_string(model.input_dim) +
                         " and " + std::to_string(model.num_classes) +
                         " classes; dataset has input_dim " + std::to_string(ds.input_dim()) +
                         " and " + std::to_string(ds.num_classes()) + " classes");
      json m;
      const auto test = ds.test_rows();
      if (test.empty()) throw UsageError("dataset has no test rows");
      const auto preds = gamepl::forward(model, ds.features.gather_rows(test));
      m["map_test"] = gamepl::map_score(preds, ds.ground_truth.gather_rows(test)).map;
      if (!eval_pseudo.empty()) {
        const auto store = gamepl::load_pseudo_csv(eval_pseudo);
        const auto train_rows = ds.train_rows();
        if (store.images() != train_rows.size() || store.classes() != ds.num_classes())
          throw UsageError("pseudo checkpoint is " + std::to_string(store.images()) + "x" +
                           std::to_string(store.classes()) + ", dataset train split is " +
                           std::to_string(train_rows.size()) + "x" +
                           std::to_string(ds.num_classes()));
        m["pseudo_map"] = gamepl::pseudo_label_quality(store, ds.ground_truth.gather_rows(train_rows),
                                                       store.observation_mask())
                              .map;
      }
      if (!eval_out.empty()) write_text(eval_out, m.dump(2) + "\n");
      std::cout << m.dump(2) << "\n";
      return kOk;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const gamepl::DimensionError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const gamepl::ArgumentError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const gamepl::DivergedError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const gamepl::UndefinedApError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const gamepl::ParseError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kIo;
  } catch (const gamepl::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  }
  return kOk;
}
