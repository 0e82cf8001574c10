#include "recaudit/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include <fmt/core.h>

extern char** environ;

namespace recaudit {

namespace {

const std::set<std::string> kModelNames{"popularity", "markov", "cooccurrence", "session_knn", "external"};

Json build_defaults() {
  return Json::parse(R"({
    "seed": null,
    "threads": 0,
    "stages": ["ingest", "preprocess", "split", "diagnose", "evaluate"],
    "input": {
      "path": null,
      "delimiter": "auto",
      "entity_column": "entity",
      "item_column": "item",
      "time_column": "timestamp",
      "type_column": null,
      "session_column": null,
      "max_reject_fraction": 0.01
    },
    "preprocess": {
      "keep_event_type": null,
      "session_mode": "by_entity",
      "gap_seconds": 3600,
      "min_seq_len": 2,
      "min_item_support": 5
    },
    "split": {
      "strategy": "time",
      "split_time": null,
      "test_days": 1,
      "selection": "all",
      "fraction": 0.1,
      "min_seq_len": 2,
      "training_window_days": null
    },
    "diagnostics": {
      "collisions": true,
      "collision_threshold": 0.1,
      "transition_rate": true,
      "transition_denominator": "active_sequences",
      "overlap": true,
      "sequentiality": true,
      "weak_signal_threshold": 0.05
    },
    "model": {
      "names": ["popularity", "markov"],
      "markov_smoothing": 0.0,
      "cooccurrence_window": 0,
      "cooccurrence_decay": false,
      "knn_k": 100,
      "knn_sample_size": 1000,
      "knn_decay": "linear",
      "external_scores": null,
      "embedding_dim": 32,
      "embeddings_path": null
    },
    "eval": {
      "cutoffs": [1, 5, 10, 20],
      "tie_policy": "optimistic",
      "prefix_start": 1,
      "samplers": ["none"],
      "shared_negatives": false,
      "compare_metric": "recall"
    },
    "output": {
      "dir": "recaudit_out",
      "formats": ["json", "csv"],
      "dump_events": false,
      "dump_dataset": false,
      "export_cases": false
    }
  })");
}

std::string join_key(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

// Names the first leaf below an unknown key so the message shows the full path.
std::string first_leaf(const Json& value, const std::string& path) {
  if (value.is_object() && !value.empty()) return first_leaf(value.begin().value(), join_key(path, value.begin().key()));
  return path;
}

bool compatible(const Json& def, const Json& value) {
  if (def.is_null() || value.is_null()) return true;
  if (def.is_number() && value.is_number()) return true;
  return def.type() == value.type();
}

void merge_into(Json& base, const Json& defaults, const Json& overlay, const std::string& path) {
  if (!overlay.is_object()) throw ConfigError(fmt::format("config section '{}' must be an object", path.empty() ? "<root>" : path));
  for (auto it = overlay.begin(); it != overlay.end(); ++it) {
    const std::string key = join_key(path, it.key());
    if (!defaults.contains(it.key())) {
      throw ConfigError(fmt::format("unknown config key '{}'", first_leaf(it.value(), key)));
    }
    const Json& def = defaults.at(it.key());
    if (def.is_object()) {
      merge_into(base[it.key()], def, it.value(), key);
    } else {
      if (!compatible(def, it.value())) {
        throw ConfigError(fmt::format("config key '{}' expects a {} value", key, def.type_name()));
      }
      base[it.key()] = it.value();
    }
  }
}

const Json& default_at(const std::string& dotted_key) {
  const Json* node = &default_config();
  std::string rest = dotted_key;
  while (true) {
    const auto dot = rest.find('.');
    const std::string part = rest.substr(0, dot);
    if (!node->is_object() || !node->contains(part)) throw ConfigError(fmt::format("unknown config key '{}'", dotted_key));
    node = &node->at(part);
    if (dot == std::string::npos) break;
    rest = rest.substr(dot + 1);
  }
  if (node->is_object()) throw ConfigError(fmt::format("config key '{}' names a section, not a value", dotted_key));
  return *node;
}

Json parse_scalar(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error&) {
    return Json(text);
  }
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

Json parse_override_value(const Json& def, const std::string& text) {
  if (def.is_string()) return Json(text);
  Json parsed = parse_scalar(text);
  if (def.is_array() && !parsed.is_array()) {
    parsed = Json::array();
    std::size_t start = 0;
    while (start <= text.size()) {
      const auto comma = text.find(',', start);
      const std::string part = trim(text.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
      if (!part.empty()) parsed.push_back(parse_scalar(part));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
  return parsed;
}

template <typename T>
T get_as(const Json& doc, const std::string& section, const std::string& key) {
  const Json& v = section.empty() ? doc.at(key) : doc.at(section).at(key);
  try {
    return v.get<T>();
  } catch (const Json::exception&) {
    throw ConfigError(fmt::format("config key '{}' has an invalid value {}", join_key(section, key), v.dump()));
  }
}

template <typename T>
std::optional<T> get_optional(const Json& doc, const std::string& section, const std::string& key) {
  const Json& v = doc.at(section).at(key);
  if (v.is_null()) return std::nullopt;
  return get_as<T>(doc, section, key);
}

std::size_t get_count(const Json& doc, const std::string& section, const std::string& key) {
  const Json& v = section.empty() ? doc.at(key) : doc.at(section).at(key);
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
    throw ConfigError(fmt::format("config key '{}' must be a non-negative integer", join_key(section, key)));
  }
  return v.get<std::size_t>();
}

// Wraps parsers that throw std::invalid_argument so the message names the key.
template <typename F>
auto keyed(const std::string& key, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(fmt::format("config key '{}': {}", key, e.what()));
  }
}

Delimiter parse_delimiter(const std::string& text) {
  if (text == "auto") return Delimiter::kAuto;
  if (text == "comma" || text == "csv" || text == ",") return Delimiter::kComma;
  if (text == "tab" || text == "tsv" || text == "\t") return Delimiter::kTab;
  throw std::invalid_argument(fmt::format("unknown delimiter '{}'", text));
}

}  // namespace

const Json& default_config() {
  static const Json defaults = build_defaults();
  return defaults;
}

void merge_config(Json& base, const Json& overlay) { merge_into(base, default_config(), overlay, ""); }

void apply_override(Json& config, const std::string& dotted_key, const std::string& value) {
  const Json& def = default_at(dotted_key);
  Json overlay = Json::object();
  Json* node = &overlay;
  std::string rest = dotted_key;
  for (auto dot = rest.find('.'); dot != std::string::npos; dot = rest.find('.')) {
    node = &(*node)[rest.substr(0, dot)];
    rest = rest.substr(dot + 1);
  }
  (*node)[rest] = parse_override_value(def, value);
  merge_config(config, overlay);
}

EnvList process_environment() {
  EnvList out;
  for (char** e = environ; e && *e; ++e) {
    const std::string entry(*e);
    const auto eq = entry.find('=');
    if (eq == std::string::npos) continue;
    out.emplace_back(entry.substr(0, eq), entry.substr(eq + 1));
  }
  return out;
}

void apply_environment(Json& config, const EnvList& env) {
  const std::string prefix = kEnvPrefix;
  std::vector<std::pair<std::string, std::string>> sorted(env.begin(), env.end());
  std::sort(sorted.begin(), sorted.end());
  for (const auto& [name, value] : sorted) {
    if (name.rfind(prefix, 0) != 0) continue;
    std::string key = name.substr(prefix.size());
    std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
    for (auto pos = key.find("__"); pos != std::string::npos; pos = key.find("__")) key.replace(pos, 2, ".");
    try {
      apply_override(config, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("environment variable {}: {}", name, e.what()));
    }
  }
}

bool RunConfig::has_stage(const std::string& stage) const {
  return std::find(stages.begin(), stages.end(), stage) != stages.end();
}

std::vector<std::string> RunConfig::stochastic_parts() const {
  std::vector<std::string> parts;
  if (has_stage("split")) {
    if (split.strategy == SplitStrategy::kRandom) parts.push_back("split.strategy=random");
    if (split.strategy == SplitStrategy::kLeaveOneOut && split.selection.kind == Selection::Kind::kRandom) {
      parts.push_back("split.selection=" + to_string(split.selection));
    }
  }
  if (has_stage("evaluate")) {
    if (eval.eval.tie_policy == TiePolicy::kRandom) parts.push_back("eval.tie_policy=random");
    bool derived_embeddings = false;
    for (const auto& s : eval.samplers) {
      if (s.stochastic()) parts.push_back("eval.samplers=" + s.label());
      if (s.needs_embeddings() && !model.embeddings_path) derived_embeddings = true;
    }
    if (derived_embeddings) parts.push_back("model.embedding_dim (derived embeddings)");
  }
  return parts;
}

RunConfig resolve_config(const Json& document) {
  Json doc = default_config();
  merge_config(doc, document);

  RunConfig cfg;
  cfg.resolved = doc;
  if (!doc.at("seed").is_null()) {
    const Json& s = doc.at("seed");
    if (!s.is_number_integer() || (s.is_number_integer() && !s.is_number_unsigned() && s.get<std::int64_t>() < 0)) {
      throw ConfigError("config key 'seed' must be a non-negative integer");
    }
    cfg.seed = s.get<std::uint64_t>();
  }
  cfg.threads = get_count(doc, "", "threads");

  // Stages: known names, no duplicates, run in canonical order.
  std::set<std::string> requested;
  for (const auto& s : doc.at("stages")) {
    if (!s.is_string()) throw ConfigError("config key 'stages' must list stage names");
    const auto name = s.get<std::string>();
    if (std::find(kStageOrder.begin(), kStageOrder.end(), name) == kStageOrder.end()) {
      throw ConfigError(fmt::format("config key 'stages': unknown stage '{}'", name));
    }
    if (!requested.insert(name).second) throw ConfigError(fmt::format("config key 'stages': duplicate stage '{}'", name));
  }
  for (const auto& name : kStageOrder) {
    if (requested.count(name)) cfg.stages.push_back(name);
  }
  if (cfg.stages.empty()) throw ConfigError("config key 'stages' must name at least one stage");
  const auto need = [&](const std::string& stage, const std::string& dependency) {
    if (requested.count(stage) && !requested.count(dependency)) {
      throw ConfigError(fmt::format("config key 'stages': stage '{}' requires stage '{}'", stage, dependency));
    }
  };
  need("preprocess", "ingest");
  need("split", "preprocess");
  need("diagnose", "ingest");
  need("evaluate", "split");

  // input
  cfg.input.path = get_optional<std::string>(doc, "input", "path");
  auto& opts = cfg.input.options;
  opts.delimiter = keyed("input.delimiter", [&] { return parse_delimiter(get_as<std::string>(doc, "input", "delimiter")); });
  opts.columns.entity = get_as<std::string>(doc, "input", "entity_column");
  opts.columns.item = get_as<std::string>(doc, "input", "item_column");
  opts.columns.time = get_as<std::string>(doc, "input", "time_column");
  opts.columns.type = get_optional<std::string>(doc, "input", "type_column");
  opts.max_reject_fraction = get_as<double>(doc, "input", "max_reject_fraction");
  if (!(opts.max_reject_fraction >= 0.0 && opts.max_reject_fraction <= 1.0)) {
    throw ConfigError("config key 'input.max_reject_fraction' must be in [0, 1]");
  }
  if (cfg.has_stage("ingest") && !cfg.input.path) throw ConfigError("config key 'input.path' is required");

  // preprocess
  cfg.preprocess.keep_event_type = get_optional<std::string>(doc, "preprocess", "keep_event_type");
  cfg.preprocess.session_mode = keyed("preprocess.session_mode", [&] {
    return parse_session_mode(get_as<std::string>(doc, "preprocess", "session_mode"));
  });
  cfg.preprocess.gap_seconds = static_cast<Timestamp>(get_count(doc, "preprocess", "gap_seconds"));
  cfg.preprocess.min_seq_len = get_count(doc, "preprocess", "min_seq_len");
  cfg.preprocess.min_item_support = get_count(doc, "preprocess", "min_item_support");
  keyed("preprocess", [&] { cfg.preprocess.validate(); return 0; });
  const auto session_column = get_optional<std::string>(doc, "input", "session_column");
  if (cfg.preprocess.session_mode == SessionMode::kBySessionColumn) {
    if (!session_column) throw ConfigError("config key 'input.session_column' is required for session_mode by_session_column");
    opts.columns.entity = *session_column;
  } else if (session_column) {
    throw ConfigError("config key 'input.session_column' is only used with session_mode by_session_column");
  }
  if (cfg.preprocess.keep_event_type && !opts.columns.type) {
    throw ConfigError("config key 'preprocess.keep_event_type' needs 'input.type_column'");
  }

  // split
  const auto strategy = get_as<std::string>(doc, "split", "strategy");
  if (strategy == "time") {
    cfg.split.strategy = SplitStrategy::kTime;
  } else if (strategy == "leave_one_out" || strategy == "loo") {
    cfg.split.strategy = SplitStrategy::kLeaveOneOut;
  } else if (strategy == "random") {
    cfg.split.strategy = SplitStrategy::kRandom;
  } else {
    throw ConfigError(fmt::format("config key 'split.strategy': unknown strategy '{}'", strategy));
  }
  const Json& st = doc.at("split").at("split_time");
  if (st.is_number_integer()) {
    cfg.split.split_time = st.get<Timestamp>();
  } else if (st.is_string()) {
    cfg.split.split_time = parse_timestamp(st.get<std::string>());
    if (!cfg.split.split_time) throw ConfigError(fmt::format("config key 'split.split_time': cannot parse '{}'", st.get<std::string>()));
  } else if (!st.is_null()) {
    throw ConfigError("config key 'split.split_time' must be an epoch second count or a date");
  }
  cfg.split.test_days = get_count(doc, "split", "test_days");
  if (cfg.split.test_days == 0) throw ConfigError("config key 'split.test_days' must be positive");
  cfg.split.seed = cfg.seed.value_or(0);
  cfg.split.selection = keyed("split.selection", [&] {
    return parse_selection(get_as<std::string>(doc, "split", "selection"), cfg.split.seed);
  });
  cfg.split.fraction = get_as<double>(doc, "split", "fraction");
  if (!(cfg.split.fraction > 0.0 && cfg.split.fraction < 1.0)) throw ConfigError("config key 'split.fraction' must be in (0, 1)");
  cfg.split.min_seq_len = get_count(doc, "split", "min_seq_len");
  if (cfg.split.min_seq_len < 2) throw ConfigError("config key 'split.min_seq_len' must be at least 2");
  if (!doc.at("split").at("training_window_days").is_null()) {
    cfg.training_window_days = get_count(doc, "split", "training_window_days");
    if (*cfg.training_window_days == 0) throw ConfigError("config key 'split.training_window_days' must be positive");
  }

  // diagnostics
  auto& dg = cfg.diagnostics;
  dg.collisions = get_as<bool>(doc, "diagnostics", "collisions");
  dg.collision_threshold = get_as<double>(doc, "diagnostics", "collision_threshold");
  dg.transition_rate = get_as<bool>(doc, "diagnostics", "transition_rate");
  dg.transition_denominator = keyed("diagnostics.transition_denominator", [&] {
    return parse_transition_denominator(get_as<std::string>(doc, "diagnostics", "transition_denominator"));
  });
  dg.overlap = get_as<bool>(doc, "diagnostics", "overlap");
  dg.sequentiality = get_as<bool>(doc, "diagnostics", "sequentiality");
  dg.weak_signal_threshold = get_as<double>(doc, "diagnostics", "weak_signal_threshold");

  // model
  auto& m = cfg.model;
  m.names = get_as<std::vector<std::string>>(doc, "model", "names");
  if (m.names.empty() && cfg.has_stage("evaluate")) throw ConfigError("config key 'model.names' must list at least one model");
  std::set<std::string> seen_models;
  for (const auto& n : m.names) {
    if (!kModelNames.count(n)) throw ConfigError(fmt::format("config key 'model.names': unknown model '{}'", n));
    if (!seen_models.insert(n).second) throw ConfigError(fmt::format("config key 'model.names': duplicate model '{}'", n));
  }
  m.markov_smoothing = get_as<double>(doc, "model", "markov_smoothing");
  if (!(m.markov_smoothing >= 0.0)) throw ConfigError("config key 'model.markov_smoothing' must be >= 0");
  m.cooccurrence_window = get_count(doc, "model", "cooccurrence_window");
  m.cooccurrence_decay = get_as<bool>(doc, "model", "cooccurrence_decay");
  m.knn.k = get_count(doc, "model", "knn_k");
  m.knn.sample_size = get_count(doc, "model", "knn_sample_size");
  if (m.knn.k == 0 || m.knn.sample_size == 0) throw ConfigError("config keys 'model.knn_k' and 'model.knn_sample_size' must be positive");
  const auto decay = get_as<std::string>(doc, "model", "knn_decay");
  if (decay == "linear") {
    m.knn.decay = KnnDecay::kLinear;
  } else if (decay == "none") {
    m.knn.decay = KnnDecay::kNone;
  } else {
    throw ConfigError(fmt::format("config key 'model.knn_decay': unknown decay '{}'", decay));
  }
  m.external_scores = get_optional<std::string>(doc, "model", "external_scores");
  if (seen_models.count("external") && !m.external_scores) {
    throw ConfigError("config key 'model.external_scores' is required for model 'external'");
  }
  m.embedding_dim = get_count(doc, "model", "embedding_dim");
  if (m.embedding_dim == 0) throw ConfigError("config key 'model.embedding_dim' must be positive");
  m.embeddings_path = get_optional<std::string>(doc, "model", "embeddings_path");

  // eval
  auto& ev = cfg.eval;
  ev.eval.cutoffs = keyed("eval.cutoffs", [&] { return get_as<std::vector<std::size_t>>(doc, "eval", "cutoffs"); });
  ev.eval.tie_policy = keyed("eval.tie_policy", [&] { return parse_tie_policy(get_as<std::string>(doc, "eval", "tie_policy")); });
  ev.eval.prefix_start = get_count(doc, "eval", "prefix_start");
  ev.eval.shared_negatives = get_as<bool>(doc, "eval", "shared_negatives");
  ev.eval.master_seed = cfg.seed.value_or(0);
  ev.eval.threads = cfg.threads;
  keyed("eval", [&] { ev.eval.validate(); return 0; });
  for (const auto& s : get_as<std::vector<std::string>>(doc, "eval", "samplers")) {
    ev.samplers.push_back(keyed("eval.samplers", [&] { return SamplerSpec::parse(s); }));
  }
  if (ev.samplers.empty()) throw ConfigError("config key 'eval.samplers' must list at least one sampler (use \"none\" for full ranking)");
  ev.compare_metric = keyed("eval.compare_metric", [&] { return parse_metric(get_as<std::string>(doc, "eval", "compare_metric")); });

  // output
  auto& out = cfg.output;
  out.dir = get_as<std::string>(doc, "output", "dir");
  out.json = out.csv = false;
  for (const auto& f : get_as<std::vector<std::string>>(doc, "output", "formats")) {
    if (f == "json") {
      out.json = true;
    } else if (f == "csv") {
      out.csv = true;
    } else {
      throw ConfigError(fmt::format("config key 'output.formats': unknown format '{}'", f));
    }
  }
  if (!out.json && !out.csv) throw ConfigError("config key 'output.formats' must include json or csv");
  out.dump_events = get_as<bool>(doc, "output", "dump_events");
  out.dump_dataset = get_as<bool>(doc, "output", "dump_dataset");
  out.export_cases = get_as<bool>(doc, "output", "export_cases");

  const auto parts = cfg.stochastic_parts();
  if (!parts.empty() && !cfg.seed) {
    std::string list;
    for (const auto& p : parts) list += (list.empty() ? "" : ", ") + p;
    throw ConfigError(fmt::format("config key 'seed' is required because these settings are random: {}", list));
  }
  return cfg;
}

RunConfig load_config(const Json& document, const EnvList& env,
                      const std::vector<std::pair<std::string, std::string>>& overrides) {
  Json doc = Json::object();
  merge_config(doc, document);
  apply_environment(doc, env);
  for (const auto& [key, value] : overrides) apply_override(doc, key, value);
  return resolve_config(doc);
}

Json read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config file '{}'", path));
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(fmt::format("config file '{}' is not valid JSON: {}", path, e.what()));
  }
  // A run manifest carries its resolved config; rerunning it repeats the run.
  if (doc.is_object() && doc.contains("tool") && doc.contains("config")) return doc.at("config");
  return doc;
}

}  // namespace recaudit
