#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "recaudit/diagnostics.hpp"
#include "recaudit/evaluator.hpp"
#include "recaudit/event_store.hpp"
#include "recaudit/preprocess.hpp"
#include "recaudit/sampling.hpp"
#include "recaudit/splitter.hpp"

namespace recaudit {

using Json = nlohmann::ordered_json;

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr const char* kToolVersion = "0.3.0";
inline constexpr const char* kEnvPrefix = "RECAUDIT_";

// Stages in execution order.
inline const std::vector<std::string> kStageOrder{"ingest", "preprocess", "split", "diagnose", "evaluate"};

// The complete key set with default values. Keys whose default is null are
// optional; "seed" has no default and must be set when a stage is stochastic.
const Json& default_config();

// Applies `overlay` on top of `base`; keys absent from the defaults raise
// ConfigError naming the dotted key.
void merge_config(Json& base, const Json& overlay);

// "section.key=value" style override. The value is parsed as JSON when it
// can be; list-valued keys also accept comma separated text.
void apply_override(Json& config, const std::string& dotted_key, const std::string& value);

// Reads RECAUDIT_<SECTION>__<KEY>=value variables (RECAUDIT_SEED for the seed).
// `lookup` enumerates the environment; tests can pass their own.
using EnvList = std::vector<std::pair<std::string, std::string>>;
EnvList process_environment();
void apply_environment(Json& config, const EnvList& env);

struct InputConfig {
  std::optional<std::string> path;
  IngestOptions options;
};

struct ModelConfig {
  std::vector<std::string> names;
  double markov_smoothing = 0.0;
  std::size_t cooccurrence_window = 0;
  bool cooccurrence_decay = false;
  SessionKnnConfig knn;
  std::optional<std::string> external_scores;
  std::size_t embedding_dim = 32;
  std::optional<std::string> embeddings_path;
};

struct DiagnosticsConfig {
  bool collisions = true;
  double collision_threshold = 0.10;
  bool transition_rate = true;
  TransitionDenominator transition_denominator = TransitionDenominator::kActiveSequences;
  bool overlap = true;
  bool sequentiality = true;
  double weak_signal_threshold = 0.05;
};

struct EvalSection {
  EvalConfig eval;
  std::vector<SamplerSpec> samplers;
  Metric compare_metric = Metric::kRecall;
};

struct OutputConfig {
  std::string dir = "recaudit_out";
  bool json = true;
  bool csv = true;
  bool dump_events = false;
  bool dump_dataset = false;
  bool export_cases = false;
};

struct RunConfig {
  Json resolved;  // every key, defaults included
  std::optional<std::uint64_t> seed;
  std::size_t threads = 0;
  std::vector<std::string> stages;
  InputConfig input;
  PipelineConfig preprocess;
  SplitSpec split;
  std::optional<std::size_t> training_window_days;
  DiagnosticsConfig diagnostics;
  ModelConfig model;
  EvalSection eval;
  OutputConfig output;

  bool has_stage(const std::string& stage) const;
  // Names of the configured parts that consume randomness.
  std::vector<std::string> stochastic_parts() const;
};

// Validates a fully merged document and converts it to typed settings.
RunConfig resolve_config(const Json& document);

// Defaults, then `document`, then the environment, then `overrides`.
RunConfig load_config(const Json& document, const EnvList& env,
                      const std::vector<std::pair<std::string, std::string>>& overrides);

// Accepts a config document or a previously written run manifest.
Json read_config_file(const std::string& path);

}  // namespace recaudit
