#include "recaudit/pipeline.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <fmt/core.h>

#include "recaudit/embeddings.hpp"
#include "recaudit/recommenders.hpp"

namespace recaudit {

namespace {

// Carries the partial results of a stage that failed part-way.
class StageError : public std::runtime_error {
 public:
  StageError(const std::string& what, Json partial) : std::runtime_error(what), partial_(std::move(partial)) {}
  const Json& partial() const { return partial_; }

 private:
  Json partial_;
};

Json input_checksum_json(const InputChecksum& c) {
  return {{"path", c.path}, {"bytes", c.bytes}, {"sha256", c.sha256}};
}

InputChecksum checksum_input(const std::string& path) {
  InputChecksum c;
  c.path = path;
  c.bytes = std::filesystem::file_size(path);
  c.sha256 = sha256_file(path);
  return c;
}

ModelPtr fit_model(const std::string& name, const Dataset& train, const RunConfig& cfg) {
  const auto& m = cfg.model;
  if (name == "popularity") return fit_popularity(train);
  if (name == "markov") return fit_markov(train, m.markov_smoothing);
  if (name == "cooccurrence") return fit_cooccurrence(train, m.cooccurrence_window, m.cooccurrence_decay);
  if (name == "session_knn") return fit_session_knn(train, m.knn);
  if (name == "external") {
    return std::make_shared<ExternalScoresModel>(ExternalScoresModel::read_file(*m.external_scores, train.catalog_size()));
  }
  throw ConfigError(fmt::format("unknown model '{}'", name));
}

std::string join_items(const ItemIndex& index, std::span<const ItemId> items) {
  std::string out;
  for (ItemId i : items) {
    if (!out.empty()) out += ' ';
    out += index.id(i);
  }
  return out;
}

class Runner {
 public:
  Runner(const RunConfig& cfg, ReportSet& results, std::ostream* log) : cfg_(cfg), results_(results), log_(log) {}

  RunManifest run() {
    manifest_.config = cfg_.resolved;
    std::string current;
    try {
      std::filesystem::create_directories(cfg_.output.dir);
      for (const auto& stage : cfg_.stages) {
        current = stage;
        const auto t0 = std::chrono::steady_clock::now();
        note(fmt::format("stage {}", stage));
        run_stage(stage);
        const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
        manifest_.stages.push_back({stage, "ok", dt.count()});
      }
      current = "emit";
      emit();
    } catch (const std::exception& e) {
      manifest_.ok = false;
      manifest_.failed_stage = current;
      manifest_.error = e.what();
      manifest_.stages.push_back({current, "failed", 0.0});
      if (const auto* se = dynamic_cast<const StageError*>(&e)) manifest_.partial = se->partial();
      note(fmt::format("stage {} failed: {}", current, e.what()));
      try {
        emit();
      } catch (const std::exception& again) {
        manifest_.partial["emit_error"] = again.what();
      }
    }
    write_manifest();
    return manifest_;
  }

 private:
  void note(const std::string& line) {
    if (log_) *log_ << line << '\n';
  }

  void warn(const std::string& code, const std::string& stage, const std::string& message) {
    manifest_.warnings.push_back({code, stage, message});
    note(fmt::format("warning {}: {}", code, message));
  }

  void run_stage(const std::string& stage) {
    if (stage == "ingest") return ingest();
    if (stage == "preprocess") return preprocess();
    if (stage == "split") return split();
    if (stage == "diagnose") return diagnose();
    if (stage == "evaluate") return evaluate();
  }

  void ingest() {
    const std::string& path = *cfg_.input.path;
    manifest_.inputs.push_back(checksum_input(path));
    log_data_ = ingest_file(path, cfg_.input.options);
    std::size_t events = log_data_.event_count();
    results_.ingest = Json{{"stage", "ingest"},
                           {"input", path},
                           {"rows_read", log_data_.rows_read},
                           {"rows_rejected", log_data_.rows_rejected},
                           {"rejected_samples", log_data_.rejected_samples},
                           {"events", events},
                           {"entities", log_data_.groups.size()},
                           {"resolution", to_string(log_data_.resolution)},
                           {"has_event_type", log_data_.has_event_type}};
    if (log_data_.rows_rejected > 0) {
      warn("W-ROWS-REJECTED", "ingest", fmt::format("{} of {} rows rejected", log_data_.rows_rejected, log_data_.rows_read));
    }
    if (cfg_.output.dump_events) {
      std::ostringstream s;
      write_canonical_dump(log_data_, s);
      write_extra("ingest", "events.tsv", s.str());
    }
  }

  void preprocess() {
    try {
      data_ = run_preprocess(log_data_, cfg_.preprocess);
    } catch (const EmptyDatasetError& e) {
      Json partial = Json::array();
      for (const auto& p : e.report()) partial.push_back(to_json(p));
      throw StageError(e.what(), Json{{"provenance", partial}});
    }
    Json provenance = Json::array();
    for (const auto& p : data_.provenance) {
      provenance.push_back(to_json(p));
      if (p.params.contains("warning")) warn("W-EVENT-TYPE-FILTER", "preprocess", p.params["warning"].get<std::string>());
    }
    const auto& pc = cfg_.preprocess;
    results_.preprocess = Json{{"stage", "preprocess"},
                               {"session_mode", to_string(pc.session_mode)},
                               {"provenance", provenance},
                               {"result",
                                {{"events", data_.event_count()},
                                 {"sequences", data_.sequences.size()},
                                 {"items", data_.catalog_size()},
                                 {"min_time", data_.min_time()},
                                 {"max_time", data_.max_time()}}}};
    if (cfg_.output.dump_dataset) {
      std::ostringstream s;
      write_dataset_dump(data_, s);
      write_extra("preprocess", "dataset.tsv", s.str());
    }
  }

  void split() {
    split_ = apply_split(data_, cfg_.split);
    if (cfg_.training_window_days) split_ = truncate_training_window(split_, *cfg_.training_window_days);
    Json j{{"stage", "split"}, {"strategy", to_string(cfg_.split.strategy)}};
    if (split_.split_time) j["split_time"] = *split_.split_time;
    if (cfg_.split.strategy == SplitStrategy::kLeaveOneOut) j["selection"] = to_string(cfg_.split.selection);
    if (cfg_.split.strategy == SplitStrategy::kRandom) j["fraction"] = cfg_.split.fraction;
    if (cfg_.training_window_days) j["training_window_days"] = *cfg_.training_window_days;
    j["leaks_time"] = split_.leaks_time;
    j["stats"] = to_json(split_.stats);
    results_.split = std::move(j);
    if (split_.leaks_time) {
      warn("W-LOO-LEAKAGE", "split",
           fmt::format("{} split lets training data come after test events; metrics may be optimistic",
                       to_string(cfg_.split.strategy)));
    }
  }

  void diagnose() {
    const auto& dc = cfg_.diagnostics;
    auto& out = results_.diagnostics;
    if (dc.collisions) {
      out.collisions = collision_stats(log_data_);
      out.collision_hazard = collision_hazard(*out.collisions, dc.collision_threshold);
      if (out.collision_hazard) {
        warn("W-COLLISION-HIGH", "diagnose",
             fmt::format("{:.2f}% of events share an entity timestamp at day resolution; event order is unreliable",
                         100.0 * out.collisions->colliding_event_fraction));
      }
    }
    const bool have_data = cfg_.has_stage("preprocess");
    const bool have_split = cfg_.has_stage("split");
    if (dc.transition_rate && have_data) {
      try {
        out.transition_rate = new_transition_rate(data_, dc.transition_denominator);
      } catch (const DataError& e) {
        out.skipped["new_transition_rate"] = e.what();
      }
    }
    if (dc.overlap && have_split) {
      try {
        out.overlap = transition_overlap(split_);
      } catch (const DataError& e) {
        out.skipped["overlap"] = e.what();
      }
    }
    if (dc.sequentiality && have_split) {
      SequentialityConfig sc;
      sc.cutoffs = cfg_.eval.eval.cutoffs;
      sc.markov_smoothing = cfg_.model.markov_smoothing;
      sc.cooccurrence_window = cfg_.model.cooccurrence_window;
      sc.weak_signal_threshold = dc.weak_signal_threshold;
      sc.seed = cfg_.seed.value_or(0);
      sc.threads = cfg_.threads;
      try {
        out.sequentiality = sequentiality_probe(split_, sc);
      } catch (const DataError& e) {
        out.skipped["sequentiality"] = e.what();
      }
    }
  }

  void evaluate() {
    const Dataset& train = split_.train;
    std::vector<ModelPtr> models;
    for (const auto& name : cfg_.model.names) {
      models.push_back(fit_model(name, train, cfg_));
      if (name == "external") manifest_.inputs.push_back(checksum_input(*cfg_.model.external_scores));
    }

    std::optional<EmbeddingMatrix> embeddings;
    for (const auto& s : cfg_.eval.samplers) {
      if (!s.needs_embeddings() || embeddings) continue;
      if (cfg_.model.embeddings_path) {
        embeddings = load_embeddings_file(*cfg_.model.embeddings_path, *train.items);
        manifest_.inputs.push_back(checksum_input(*cfg_.model.embeddings_path));
      } else {
        const std::size_t dim = std::min(cfg_.model.embedding_dim, train.catalog_size());
        embeddings = derive_embeddings(train, dim, cfg_.seed.value_or(0));
      }
    }

    if (cfg_.output.export_cases) export_cases();

    std::vector<std::vector<MetricReport>> by_model(models.size());
    bool sampled = false;
    for (std::size_t m = 0; m < models.size(); ++m) {
      for (const auto& sampler : cfg_.eval.samplers) {
        sampled |= sampler.kind != SamplerKind::kNone;
        MetricReport r = evaluate_model(*models[m], split_, cfg_.eval.eval, sampler, embeddings ? &*embeddings : nullptr);
        note(fmt::format("  {} / {}: {} cases, {:.3f}s, {:.0f} scored lists/s", r.model, r.sampler, r.case_count,
                         r.seconds, r.scored_lists_per_second()));
        by_model[m].push_back(r);
        results_.metrics.push_back(std::move(r));
      }
    }
    for (std::size_t s = 0; s < cfg_.eval.samplers.size(); ++s) {
      for (std::size_t a = 0; a < models.size(); ++a) {
        for (std::size_t b = a + 1; b < models.size(); ++b) {
          results_.crossings.push_back(crossing_analysis(by_model[a][s], by_model[b][s], cfg_.eval.compare_metric));
        }
      }
    }
    if (sampled) {
      warn("W-SAMPLED-METRICS", "evaluate",
           "metrics computed against sampled negatives overstate full-ranking performance and may reorder models");
    }
  }

  static MetricReport evaluate_model(const RecommenderModel& model, const DatasetSplit& split, const EvalConfig& ec,
                                     const SamplerSpec& sampler, const EmbeddingMatrix* embeddings) {
    return recaudit::evaluate(model, split, ec, sampler, embeddings);
  }

  void export_cases() {
    const auto cases = enumerate_test_cases(split_, cfg_.eval.eval.prefix_start);
    const ItemIndex& index = *split_.train.items;
    std::string text = "case_id\tsequence_id\tposition\ttarget\tscoreable\tcontext\n";
    std::vector<ItemId> context;
    for (const auto& c : cases) {
      case_context(split_, c, context);
      text += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\n", c.case_id, split_.test.sequences[c.sequence].seq_id, c.position,
                          index.id(c.target), c.scoreable ? 1 : 0, join_items(index, context));
    }
    write_extra("evaluate", "cases.tsv", text);
  }

  void write_extra(const std::string& stage, const std::string& name, const std::string& contents) {
    write_text_file((std::filesystem::path(cfg_.output.dir) / name).string(), contents);
    extra_.push_back({stage, name});
  }

  void emit() {
    auto files = extra_;
    for (auto& f : emit_reports(results_, cfg_.output.dir, cfg_.output.json, cfg_.output.csv)) files.push_back(f);
    manifest_.reports.clear();
    for (const auto& f : files) {
      manifest_.reports.push_back(
          {f.stage, f.path, sha256_file((std::filesystem::path(cfg_.output.dir) / f.path).string())});
    }
  }

  void write_manifest() {
    std::error_code ec;
    std::filesystem::create_directories(cfg_.output.dir, ec);
    write_json_file((std::filesystem::path(cfg_.output.dir) / "manifest.json").string(), to_json(manifest_));
  }

  const RunConfig& cfg_;
  ReportSet& results_;
  std::ostream* log_;
  RunManifest manifest_;
  EventLog log_data_;
  Dataset data_;
  DatasetSplit split_;
  std::vector<EmittedFile> extra_;
};

}  // namespace

Json to_json(const RunManifest& m) {
  Json j{{"tool", "recaudit"}, {"version", kToolVersion}, {"status", m.ok ? "ok" : "failed"}};
  if (m.failed_stage) j["failed_stage"] = *m.failed_stage;
  if (m.error) j["error"] = *m.error;
  Json warnings = Json::array();
  for (const auto& w : m.warnings) warnings.push_back({{"code", w.code}, {"stage", w.stage}, {"message", w.message}});
  j["warnings"] = std::move(warnings);
  j["config"] = m.config;
  Json inputs = Json::array();
  for (const auto& c : m.inputs) inputs.push_back(input_checksum_json(c));
  j["inputs"] = std::move(inputs);
  Json stages = Json::array();
  for (const auto& s : m.stages) stages.push_back({{"name", s.name}, {"status", s.status}, {"seconds", s.seconds}});
  j["stages"] = std::move(stages);
  Json reports = Json::array();
  for (const auto& r : m.reports) reports.push_back({{"stage", r.stage}, {"path", r.path}, {"sha256", r.sha256}});
  j["reports"] = std::move(reports);
  if (!m.partial.empty()) j["partial"] = m.partial;
  return j;
}

int exit_code(const RunManifest& m) {
  if (!m.ok) return 1;
  return m.warnings.empty() ? 0 : 2;
}

Json dry_run_plan(const RunConfig& cfg) {
  Json plan = Json::array();
  for (const auto& stage : cfg.stages) {
    Json step{{"stage", stage}};
    if (stage == "ingest") step["input"] = *cfg.input.path;
    if (stage == "preprocess") step["session_mode"] = to_string(cfg.preprocess.session_mode);
    if (stage == "split") step["strategy"] = to_string(cfg.split.strategy);
    if (stage == "evaluate") {
      step["models"] = cfg.model.names;
      Json samplers = Json::array();
      for (const auto& s : cfg.eval.samplers) samplers.push_back(s.label());
      step["samplers"] = samplers;
    }
    plan.push_back(std::move(step));
  }
  Json expected = Json::array();
  if (cfg.has_stage("split") && cfg.split.strategy != SplitStrategy::kTime) expected.push_back("W-LOO-LEAKAGE");
  if (cfg.has_stage("evaluate")) {
    for (const auto& s : cfg.eval.samplers) {
      if (s.kind != SamplerKind::kNone) {
        expected.push_back("W-SAMPLED-METRICS");
        break;
      }
    }
  }
  return Json{{"tool", "recaudit"},
              {"version", kToolVersion},
              {"dry_run", true},
              {"output_dir", cfg.output.dir},
              {"plan", plan},
              {"possible_warnings", expected},
              {"config", cfg.resolved}};
}

RunManifest run_pipeline(const RunConfig& cfg, ReportSet& results, std::ostream* log) {
  return Runner(cfg, results, log).run();
}

RunManifest run_pipeline(const RunConfig& cfg, std::ostream* log) {
  ReportSet results;
  return run_pipeline(cfg, results, log);
}

}  // namespace recaudit
