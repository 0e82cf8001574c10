#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "recaudit/config.hpp"
#include "recaudit/report.hpp"

namespace recaudit {

struct RunWarning {
  std::string code;  // W-COLLISION-HIGH, W-LOO-LEAKAGE, W-SAMPLED-METRICS, ...
  std::string stage;
  std::string message;
};

struct StageRecord {
  std::string name;
  std::string status;  // "ok" | "failed"
  double seconds = 0.0;
};

struct InputChecksum {
  std::string path;
  std::uintmax_t bytes = 0;
  std::string sha256;
};

struct ReportChecksum {
  std::string stage;
  std::string path;
  std::string sha256;
};

struct RunManifest {
  Json config;
  std::vector<InputChecksum> inputs;
  std::vector<StageRecord> stages;
  std::vector<ReportChecksum> reports;
  std::vector<RunWarning> warnings;
  bool ok = true;
  std::optional<std::string> failed_stage;
  std::optional<std::string> error;
  Json partial = Json::object();  // whatever the failed stage had collected
};

Json to_json(const RunManifest& m);

// 0 = success, 1 = hard error, 2 = success with warnings.
int exit_code(const RunManifest& m);

// The plan a run would execute, without reading any data.
Json dry_run_plan(const RunConfig& cfg);

// Runs the configured stages in order, writes every report plus manifest.json
// into cfg.output.dir and returns the manifest. Stage failures are recorded in
// the manifest (and the partial manifest is still written). Progress lines go
// to `log` when given.
RunManifest run_pipeline(const RunConfig& cfg, std::ostream* log = nullptr);

// Same, but also hands back the in-memory results.
RunManifest run_pipeline(const RunConfig& cfg, ReportSet& results, std::ostream* log = nullptr);

}  // namespace recaudit
