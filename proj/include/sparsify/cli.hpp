// Copyright 2026 The Sparsify Authors.
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

#pragma once

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sparsify/experiment.hpp"

namespace sparsify::cli {

enum ExitCode : int { kOk = 0, kRuntimeError = 1, kUsageError = 2 };

inline constexpr const char* kOutputRootEnv = "SPARSIFY_OUTPUT_ROOT";

/// Directory for one experiment: <root>/<name>_seed<seed>.
inline fs::path experiment_dir(const ExperimentConfig& c) {
  const char* env = std::getenv(kOutputRootEnv);
  const fs::path root = (env && *env) ? fs::path(env) : fs::path(c.output_dir);
  return root / (c.name + "_seed" + std::to_string(c.seed));
}

inline ExperimentConfig load_config(const fs::path& path,
                                    std::optional<std::uint64_t> seed_override) {
  json j;
  try {
    j = read_json_file(path);
  } catch (const std::exception& e) {
    throw ConfigError("<config>", e.what());
  }
  if (seed_override) {
    if (!j.is_object()) throw ConfigError("<root>", "expected an object");
    j["seed"] = *seed_override;
  }
  return parse_config(j);
}

struct RunArtifacts {
  fs::path dir;
  FitResult fit;
  std::vector<Ticket> tickets;
  Model model;
};

inline Checkpoint run_checkpoint(const ExperimentConfig& c, const Model& model,
                                 const SparsifyCallback& cb,
                                 const std::vector<MetricRow>& metrics) {
  Checkpoint ck;
  ck.model = model;
  ck.masks = by_layer(model, cb.masks());
  std::vector<Tensor> hist;
  for (const auto& h : cb.state().histories) hist.push_back(h.wi);
  ck.history = by_layer(model, hist);
  ck.rewind_snapshot = cb.state().rewind_snapshot;
  ck.plan = c.plan_echo;
  const std::size_t tail = std::min<std::size_t>(metrics.size(), 10);
  ck.metrics_tail.assign(metrics.end() - static_cast<long>(tail), metrics.end());
  ck.meta = json{{"name", c.name}, {"seed", c.seed}, {"epochs", c.train.epochs}};
  return ck;
}

/// Trains the configured model with the sparsify callback and writes
/// metrics.csv, metrics.svg, checkpoint.json and summary.txt (plus tickets
/// and rounds.csv when tickets are saved).
inline RunArtifacts run_experiment(ExperimentConfig c, std::ostream& out) {
  RunArtifacts art;
  art.dir = experiment_dir(c);
  fs::create_directories(art.dir);

  const Rng root(c.seed);
  Rng data_rng = root.split(1), init_rng = root.split(2);
  c.train.seed = c.seed;
  c.plan.seed = root.split(3).next_u64();

  const Dataset data = make_dataset(c.dataset, data_rng);
  Model model = c.model.build(init_rng);
  SparsifyCallback cb(c.plan);
  CallbackHooks hooks;
  hooks.subscribe(cb);

  try {
    art.fit = fit(model, data, c.train, hooks);
  } catch (const TrainingAborted& e) {
    save_checkpoint(art.dir / "aborted.json",
                    run_checkpoint(c, e.model, cb, e.partial.metrics));
    throw;
  }
  art.model = model;
  art.tickets = cb.tickets();

  write_text_file(art.dir / "metrics.csv", metrics_csv(art.fit.metrics));
  Series ms{"model sparsity", {}, {}, "#1f77b4"}, ts{"target", {}, {}, "#d62728"};
  for (const auto& r : art.fit.metrics) {
    ms.x.push_back(static_cast<double>(r.step));
    ms.y.push_back(r.model_sparsity);
    ts.x.push_back(static_cast<double>(r.step));
    ts.y.push_back(r.target_sparsity);
  }
  write_text_file(art.dir / "metrics.svg",
                  line_chart_svg(c.name + ": sparsity", "step", "sparsity (%)", {ms, ts}));
  save_checkpoint(art.dir / "checkpoint.json", run_checkpoint(c, model, cb, art.fit.metrics));

  if (!art.tickets.empty()) {
    for (const auto& t : art.tickets) {
      Checkpoint tk;
      tk.model = t.weights;
      tk.masks = by_layer(t.weights, t.masks);
      tk.history.resize(t.weights.layers().size());
      tk.rewind_snapshot = cb.state().rewind_snapshot;
      tk.plan = c.plan_echo;
      tk.meta = json{{"name", c.name}, {"seed", c.seed}, {"round", t.round},
                     {"step", t.step}, {"target_sparsity", t.target},
                     {"mask_sparsity", 100.0 * t.sparsity}};
      if (t.accuracy) tk.meta["accuracy"] = *t.accuracy;
      save_checkpoint(art.dir / "tickets" / ("ticket_" + std::to_string(t.round) + ".json"), tk);
    }
    write_text_file(art.dir / "rounds.csv", rounds_csv(art.tickets));
  }

  std::ostringstream sum;
  sum << "experiment: " << c.name << "\n"
      << "seed: " << c.seed << "\n"
      << "epochs: " << c.train.epochs << "\n"
      << "granularity: " << c.plan.granularity << "\n"
      << "context: " << c.plan.context.name() << "\n"
      << "criterion: " << c.plan.criterion.name() << "\n"
      << "schedule: " << c.plan.schedule.name() << "\n"
      << "target sparsity (%): " << format_double(c.plan.sparsity) << "\n"
      << "final model sparsity (%): " << format_double(100.0 * sparsity_of(cb.masks())) << "\n"
      << "final train loss: " << format_double(art.fit.final_eval.loss) << "\n"
      << "final train accuracy: " << format_double(art.fit.final_eval.accuracy) << "\n"
      << "tickets: " << art.tickets.size() << "\n";
  write_text_file(art.dir / "summary.txt", sum.str());
  out << sum.str() << "artifacts: " << art.dir.string() << "\n";
  return art;
}

// ---------------------------------------------------------------------------
// Commands

inline int cmd_run(const std::string& path, std::optional<std::uint64_t> seed,
                   bool require_lth, std::ostream& out) {
  ExperimentConfig c = load_config(path, seed);
  if (require_lth) {
    if (!c.plan.lth) throw ConfigError("sparsify.lth", "must be true for the lth command");
    c.plan.save_tickets = true;
  }
  run_experiment(std::move(c), out);
  return kOk;
}

struct ScheduleOptions {
  std::string kind;
  int samples = 101;
  double sparsity = 100.0;
  double alpha = 14.0;
  double beta = 6.0;
  int n_steps = 5;
  std::string out_dir = ".";
};

/// Writes schedule_<kind>.csv (t,sparsity) and schedule_<kind>.svg.
inline int cmd_schedule(const ScheduleOptions& o, std::ostream& out) {
  ScheduleSpec spec = detail::wrap("kind", [&] { return parse_schedule_kind(o.kind); });
  if (o.samples < 2) throw ConfigError("--samples", "must be at least 2");
  if (o.n_steps < 1) throw ConfigError("--n-steps", "must be at least 1");
  detail::wrap("--sparsity", [&] { check_sparsity(o.sparsity); });
  spec.final_sparsity = o.sparsity;
  spec.alpha = o.alpha;
  spec.beta = o.beta;
  spec.n_steps = o.n_steps;

  std::string csv = "t,sparsity\n";
  Series se{o.kind, {}, {}, "#1f77b4"};
  for (int i = 0; i < o.samples; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(o.samples - 1);
    const double v = eval_schedule(spec, t);
    csv += format_double(t) + "," + format_double(v) + "\n";
    se.x.push_back(t);
    se.y.push_back(v);
  }
  const fs::path dir(o.out_dir);
  const auto csv_path = dir / ("schedule_" + o.kind + ".csv");
  const auto svg_path = dir / ("schedule_" + o.kind + ".svg");
  write_text_file(csv_path, csv);
  write_text_file(svg_path, line_chart_svg(o.kind, "normalized progress t", "sparsity (%)", {se}));
  out << "wrote " << csv_path.string() << "\nwrote " << svg_path.string() << "\n";
  return kOk;
}

struct PruneOptions {
  std::string checkpoint;
  double sparsity = 0.0;
  std::string granularity = "weight";
  std::string context = "local";
  std::string criterion = "large_final";
  std::string output;
  std::uint64_t seed = 0;
};

struct LayerReport {
  std::size_t layer = 0;
  std::string kind;
  Shape shape;
  std::size_t blocks = 0;
  std::size_t pruned_blocks = 0;
  double sparsity = 0.0;  // percent of pruned weights
};

inline std::string report_csv(const std::vector<LayerReport>& rows) {
  std::string s = "layer,kind,shape,blocks,pruned_blocks,sparsity\n";
  for (const auto& r : rows) {
    std::string shape;
    for (std::size_t i = 0; i < r.shape.size(); ++i)
      shape += (i ? "x" : "") + std::to_string(r.shape[i]);
    s += std::to_string(r.layer) + "," + r.kind + "," + shape + "," +
         std::to_string(r.blocks) + "," + std::to_string(r.pruned_blocks) + "," +
         format_double(r.sparsity) + "\n";
  }
  return s;
}

/// Static pruning of a saved model. Returns the per-layer report.
inline std::vector<LayerReport> prune_checkpoint(const PruneOptions& o,
                                                 std::ostream& out) {
  detail::wrap("--sparsity", [&] { check_sparsity(o.sparsity); });
  const Criterion crit = detail::wrap("--criterion", [&] { return parse_criterion(o.criterion); });
  const ContextSpec ctx = detail::wrap("--context", [&] { return parse_context(o.context); });

  Checkpoint ck = load_checkpoint(o.checkpoint);
  const auto ids = ck.model.prunable_indices();
  if (ids.empty()) throw ConfigError("<checkpoint>", "model has no prunable layers");
  for (auto id : ids)
    detail::wrap("--granularity", [&] {
      parse_granularity(o.granularity, ck.model.layers()[id].weight.rank());
    });

  std::vector<Tensor> hist;
  if (crit.needs_history()) {
    for (auto id : ids) {
      if (!ck.history[id])
        throw ConfigError("--criterion", "criterion '" + std::string(crit.name()) +
                                             "' requires weight history, but layer " +
                                             std::to_string(id) + " of the checkpoint has none");
      hist.push_back(*ck.history[id]);
    }
  }

  SparsifyPlan plan;
  plan.sparsity = o.sparsity;
  plan.granularity = o.granularity;
  plan.context = ctx;
  plan.criterion = crit;
  Rng rng(o.seed);
  const auto masks = prune_model(ck.model, plan, rng, hist.empty() ? nullptr : &hist);

  ck.masks = by_layer(ck.model, masks);
  for (auto id : ids) ck.history[id] = ck.model.layers()[id].weight;
  ck.plan = json{{"sparsity", o.sparsity}, {"granularity", o.granularity},
                 {"context", o.context}, {"criterion", o.criterion}, {"mode", "static"}};

  fs::path dst = o.output.empty()
                     ? fs::path(o.checkpoint).replace_extension(".pruned.json")
                     : fs::path(o.output);
  save_checkpoint(dst, ck);

  std::vector<LayerReport> rep;
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const auto& l = ck.model.layers()[ids[k]];
    const auto part = enumerate_blocks(parse_granularity(o.granularity, l.weight.rank()),
                                       l.weight.shape());
    rep.push_back({ids[k], std::string(layer_kind_name(l.kind)), l.weight.shape(),
                   part.blocks.size(), pruned_blocks(masks[k], part),
                   100.0 * sparsity_of(masks[k])});
  }
  const auto report_path = fs::path(dst).replace_extension(".report.csv");
  write_text_file(report_path, report_csv(rep));
  out << report_csv(rep) << "global sparsity: " << format_double(100.0 * sparsity_of(masks))
      << "\nwrote " << dst.string() << "\nwrote " << report_path.string() << "\n";
  return rep;
}

/// Prints per-layer shape, sparsity and integrity; returns kRuntimeError on
/// any integrity failure.
inline int cmd_inspect(const std::string& path, std::ostream& out, std::ostream& err) {
  Checkpoint ck;
  try {
    ck = load_checkpoint(path);
  } catch (const CheckpointError& e) {
    err << "integrity failure: " << e.what() << "\n";
    return kRuntimeError;
  }
  std::string granularity;
  if (ck.plan.is_object() && ck.plan.contains("granularity") && ck.plan["granularity"].is_string())
    granularity = ck.plan["granularity"].get<std::string>();

  bool ok = true;
  std::size_t zeros = 0, total = 0;
  out << "layer,kind,shape,sparsity,block_purity,mask_applied\n";
  for (std::size_t i = 0; i < ck.model.layers().size(); ++i) {
    const auto& l = ck.model.layers()[i];
    if (!l.prunable()) continue;
    const Mask m = ck.masks[i].value_or(Mask(l.weight.shape(), 1));
    zeros += m.zeros();
    total += m.size();

    std::string purity = "n/a";
    if (!granularity.empty()) {
      try {
        const auto part = enumerate_blocks(parse_granularity(granularity, l.weight.rank()),
                                           l.weight.shape());
        purity = is_block_pure(m, part) ? "pure" : "IMPURE";
      } catch (const std::invalid_argument&) {
      }
    }
    bool applied = true;
    for (std::size_t k = 0; k < m.size(); ++k)
      if (!m[k] && l.weight[k] != 0.0) applied = false;
    ok = ok && purity != "IMPURE" && applied;

    std::string shape;
    for (std::size_t a = 0; a < l.weight.rank(); ++a)
      shape += (a ? "x" : "") + std::to_string(l.weight.shape()[a]);
    out << i << "," << layer_kind_name(l.kind) << "," << shape << ","
        << format_double(100.0 * sparsity_of(m)) << "," << purity << ","
        << (applied ? "yes" : "NO") << "\n";
  }
  out << "global sparsity: "
      << format_double(total ? 100.0 * static_cast<double>(zeros) / static_cast<double>(total) : 0.0)
      << "\n";
  if (!ok) {
    err << "integrity failure: mask structure or application is inconsistent\n";
    return kRuntimeError;
  }
  out << "integrity: ok\n";
  return kOk;
}

/// Entry point shared by the executable and the tests.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  CLI::App app{"Neural-network sparsification experiments"};
  app.require_subcommand(1);
  std::optional<std::uint64_t> seed;

  std::string run_config;
  auto* run = app.add_subcommand("run", "Train with dynamic sparsification");
  run->add_option("config", run_config, "experiment config (JSON)")->required();
  run->add_option("--seed", seed, "override the config seed");

  std::string lth_config;
  auto* lth = app.add_subcommand("lth", "Lottery-ticket experiment with saved tickets");
  lth->add_option("config", lth_config, "experiment config (JSON)")->required();
  lth->add_option("--seed", seed, "override the config seed");

  ScheduleOptions so;
  auto* sched = app.add_subcommand("schedule", "Sample a sparsity schedule to CSV and SVG");
  sched->add_option("kind", so.kind, "schedule name")->required();
  sched->add_option("--samples", so.samples, "number of uniform t samples");
  sched->add_option("--sparsity", so.sparsity, "final sparsity (percent)");
  sched->add_option("--alpha", so.alpha, "one_cycle alpha");
  sched->add_option("--beta", so.beta, "one_cycle beta");
  sched->add_option("--n-steps", so.n_steps, "iterative step count");
  sched->add_option("--out", so.out_dir, "output directory");

  PruneOptions po;
  auto* prune = app.add_subcommand("prune", "Statically prune a checkpoint");
  prune->add_option("checkpoint", po.checkpoint, "input checkpoint")->required();
  prune->add_option("--sparsity", po.sparsity, "target sparsity (percent)")->required();
  prune->add_option("--granularity", po.granularity, "granularity alias or axes:<list>");
  prune->add_option("--context", po.context, "local or global");
  prune->add_option("--criterion", po.criterion, "pruning criterion");
  prune->add_option("--output", po.output, "output checkpoint path");
  prune->add_option("--seed", po.seed, "seed for the random criterion");

  std::string inspect_path;
  auto* inspect = app.add_subcommand("inspect", "Report sparsity and mask integrity");
  inspect->add_option("checkpoint", inspect_path, "checkpoint to inspect")->required();

  std::vector<const char*> argv{"sparsify"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsageError;
  }

  try {
    if (*run) return cmd_run(run_config, seed, false, out);
    if (*lth) return cmd_run(lth_config, seed, true, out);
    if (*sched) return cmd_schedule(so, out);
    if (*prune) {
      prune_checkpoint(po, out);
      return kOk;
    }
    if (*inspect) return cmd_inspect(inspect_path, out, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kUsageError;
}

}  // namespace sparsify::cli
