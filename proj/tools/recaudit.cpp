// recaudit: command-line front end for the evaluation audit pipeline.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "recaudit/config.hpp"
#include "recaudit/pipeline.hpp"
#include "recaudit/synthetic.hpp"
#include "recaudit/topc_probability.hpp"

namespace {

using recaudit::Json;
using Overrides = std::vector<std::pair<std::string, std::string>>;

struct CommonOptions {
  std::string config_path;
  std::string input;
  std::string output;
  std::vector<std::string> sets;
  std::optional<std::size_t> threads;
  std::optional<std::uint64_t> seed;
  bool dry_run = false;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config,-c", o.config_path, "JSON run config (or a previous run manifest)");
  cmd->add_option("--input,-i", o.input, "event log (CSV/TSV, optionally .gz)");
  cmd->add_option("--output,-o", o.output, "output directory");
  cmd->add_option("--set", o.sets, "override a config key: section.key=value")->take_all();
  cmd->add_option("--threads", o.threads, "worker threads (0 = all cores)");
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_flag("--dry-run", o.dry_run, "validate the config and print the plan without reading data");
  cmd->add_flag("--quiet,-q", o.quiet, "no progress output");
}

Overrides common_overrides(const CommonOptions& o) {
  Overrides out;
  if (!o.input.empty()) out.emplace_back("input.path", o.input);
  if (!o.output.empty()) out.emplace_back("output.dir", o.output);
  if (o.threads) out.emplace_back("threads", std::to_string(*o.threads));
  if (o.seed) out.emplace_back("seed", std::to_string(*o.seed));
  for (const auto& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw recaudit::ConfigError(fmt::format("--set expects key=value, got '{}'", s));
    out.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  return out;
}

std::string stages_json(std::initializer_list<const char*> stages) {
  Json j = Json::array();
  for (const char* s : stages) j.push_back(s);
  return j.dump();
}

int execute(const CommonOptions& o, Overrides extra) {
  Json document = o.config_path.empty() ? Json::object() : recaudit::read_config_file(o.config_path);
  Overrides overrides = std::move(extra);
  for (auto& kv : common_overrides(o)) overrides.push_back(std::move(kv));
  const recaudit::RunConfig cfg = recaudit::load_config(document, recaudit::process_environment(), overrides);
  if (o.dry_run) {
    std::cout << recaudit::dry_run_plan(cfg).dump(2) << '\n';
    return 0;
  }
  const auto manifest = recaudit::run_pipeline(cfg, o.quiet ? nullptr : &std::cerr);
  const Json summary = recaudit::to_json(manifest);
  Json brief{{"status", summary["status"]}, {"output_dir", cfg.output.dir}, {"warnings", summary["warnings"]},
             {"reports", summary["reports"]}};
  if (manifest.error) brief["error"] = *manifest.error;
  if (manifest.failed_stage) brief["failed_stage"] = *manifest.failed_stage;
  std::cout << brief.dump(2) << '\n';
  return recaudit::exit_code(manifest);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Audit offline evaluation of sequential recommenders"};
  app.require_subcommand(1);
  app.set_version_flag("--version", recaudit::kToolVersion);

  CommonOptions ingest_o, pre_o, split_o, diag_o, eval_o, cmp_o, run_o;
  std::function<int()> action;

  auto* ingest = app.add_subcommand("ingest", "read and validate an event log");
  add_common(ingest, ingest_o);
  bool dump_events = false;
  ingest->add_flag("--dump", dump_events, "also write the canonical events.tsv");
  ingest->callback([&] {
    action = [&] {
      Overrides x{{"stages", stages_json({"ingest"})}};
      if (dump_events) x.emplace_back("output.dump_events", "true");
      return execute(ingest_o, x);
    };
  });

  auto* pre = app.add_subcommand("preprocess", "sessionize, collapse repeats and filter to a fixpoint");
  add_common(pre, pre_o);
  bool dump_dataset = false;
  pre->add_flag("--dump", dump_dataset, "also write dataset.tsv");
  pre->callback([&] {
    action = [&] {
      Overrides x{{"stages", stages_json({"ingest", "preprocess"})}};
      if (dump_dataset) x.emplace_back("output.dump_dataset", "true");
      return execute(pre_o, x);
    };
  });

  auto* split = app.add_subcommand("split", "split preprocessed data into train and test");
  add_common(split, split_o);
  std::string strategy, selection, split_time;
  std::optional<std::size_t> test_days, window_days;
  std::optional<double> fraction;
  split->add_option("--strategy", strategy, "time | loo | random");
  split->add_option("--test-days", test_days, "time split: days held out at the end");
  split->add_option("--fraction", fraction, "random split: test probability per sequence");
  split->add_option("--window-days", window_days, "keep only this many training days before the split");
  split->add_option("--selection", selection, "leave-one-out selection: all | most_recent:K | random:K");
  split->add_option("--split-time", split_time, "split instant (epoch seconds or date)");
  split->callback([&] {
    action = [&] {
      Overrides x{{"stages", stages_json({"ingest", "preprocess", "split"})}};
      if (!strategy.empty()) x.emplace_back("split.strategy", strategy);
      if (!selection.empty()) x.emplace_back("split.selection", selection);
      if (!split_time.empty()) x.emplace_back("split.split_time", split_time);
      if (test_days) x.emplace_back("split.test_days", std::to_string(*test_days));
      if (fraction) x.emplace_back("split.fraction", fmt::format("{}", *fraction));
      if (window_days) x.emplace_back("split.training_window_days", std::to_string(*window_days));
      return execute(split_o, x);
    };
  });

  auto* diag = app.add_subcommand("diagnose", "collision, drift, overlap and sequentiality diagnostics");
  add_common(diag, diag_o);
  bool collisions_only = false;
  diag->add_flag("--collisions-only", collisions_only, "only the raw-log collision statistics");
  diag->callback([&] {
    action = [&] {
      Overrides x{{"stages", collisions_only ? stages_json({"ingest", "diagnose"})
                                             : stages_json({"ingest", "preprocess", "split", "diagnose"})}};
      return execute(diag_o, x);
    };
  });

  auto* eval = app.add_subcommand("evaluate", "score models with full ranking or sampled negatives");
  add_common(eval, eval_o);
  std::string models, samplers, cutoffs, tie_policy;
  eval->add_option("--model,--models", models, "comma separated: popularity, markov, cooccurrence, session_knn, external");
  eval->add_option("--sampler,--samplers", samplers, "comma separated, e.g. none,uniform:100,popularity:1%");
  eval->add_option("--cutoffs", cutoffs, "comma separated cutoffs, e.g. 1,5,10,20");
  eval->add_option("--tie-policy", tie_policy, "optimistic | pessimistic | random");
  eval->callback([&] {
    action = [&] {
      Overrides x{{"stages", stages_json({"ingest", "preprocess", "split", "evaluate"})}};
      if (!models.empty()) x.emplace_back("model.names", models);
      if (!samplers.empty()) x.emplace_back("eval.samplers", samplers);
      if (!cutoffs.empty()) x.emplace_back("eval.cutoffs", cutoffs);
      if (!tie_policy.empty()) x.emplace_back("eval.tie_policy", tie_policy);
      return execute(eval_o, x);
    };
  });

  auto* cmp = app.add_subcommand("compare", "find cutoffs where two models swap order");
  add_common(cmp, cmp_o);
  std::string cmp_models, cmp_samplers, cmp_metric, cmp_cutoffs;
  cmp->add_option("--models", cmp_models, "comma separated model names")->required();
  cmp->add_option("--metric", cmp_metric, "recall | mrr");
  cmp->add_option("--samplers", cmp_samplers, "comma separated sampler specs");
  cmp->add_option("--cutoffs", cmp_cutoffs, "comma separated cutoffs");
  cmp->callback([&] {
    action = [&] {
      Overrides x{{"stages", stages_json({"ingest", "preprocess", "split", "evaluate"})},
                  {"model.names", cmp_models}};
      if (!cmp_metric.empty()) x.emplace_back("eval.compare_metric", cmp_metric);
      if (!cmp_samplers.empty()) x.emplace_back("eval.samplers", cmp_samplers);
      if (!cmp_cutoffs.empty()) x.emplace_back("eval.cutoffs", cmp_cutoffs);
      return execute(cmp_o, x);
    };
  });

  auto* run = app.add_subcommand("run", "run the stages listed in the config");
  add_common(run, run_o);
  run->callback([&] { action = [&] { return execute(run_o, {}); }; });

  auto* prob = app.add_subcommand("prob", "chance that a full-ranking rank reaches the top-C under uniform sampling");
  std::uint64_t catalog = 0, rank = 0, samples = 0, cutoff = 0;
  std::optional<double> target_p;
  prob->add_option("--catalog", catalog, "catalog size N")->required();
  prob->add_option("--rank", rank, "full-ranking rank R");
  prob->add_option("--samples", samples, "number of negatives S")->required();
  prob->add_option("--cutoff", cutoff, "list length C")->required();
  prob->add_option("--min-probability", target_p, "report the largest rank reaching the top-C with at least this probability");
  prob->callback([&] {
    action = [&] {
      Json out{{"catalog", catalog}, {"samples", samples}, {"cutoff", cutoff}};
      if (rank > 0) {
        const double exact = recaudit::sampled_topc_probability(catalog, rank, samples, cutoff);
        const double logspace = recaudit::sampled_topc_probability_log(catalog, rank, samples, cutoff);
        out["rank"] = rank;
        out["probability"] = exact;
        out["probability_log_space"] = logspace;
      }
      if (target_p) {
        out["min_probability"] = *target_p;
        out["max_rank"] = recaudit::max_rank_with_probability(catalog, samples, cutoff, *target_p);
      }
      if (rank == 0 && !target_p) throw recaudit::ConfigError("prob needs --rank or --min-probability");
      std::cout << out.dump(2) << '\n';
      return 0;
    };
  });

  auto* synth = app.add_subcommand("synth", "write a synthetic event log with drifting transitions");
  std::string synth_out;
  recaudit::synthetic::LogSpec spec;
  synth->add_option("--out", synth_out, "output CSV path")->required();
  synth->add_option("--seed", spec.drift.seed, "generator seed");
  synth->add_option("--users", spec.users, "number of users");
  synth->add_option("--days", spec.drift.days, "number of days");
  synth->add_option("--items", spec.drift.items, "catalog size");
  synth->add_option("--activity", spec.activity, "probability a user is active on a day");
  synth->add_option("--drift-day", spec.drift.drift_day, "day of the abrupt transition change");
  synth->callback([&] {
    action = [&] {
      if (spec.drift.drift_day >= spec.drift.days) spec.drift.drift_day = spec.drift.days - 1;
      const auto events = recaudit::synthetic::event_log(spec);
      std::ofstream out(synth_out);
      if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", synth_out));
      recaudit::synthetic::write_event_csv(events, out);
      std::cerr << fmt::format("wrote {} events to {}\n", events.size(), synth_out);
      return 0;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  try {
    return action ? action() : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
