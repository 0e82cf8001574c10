#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "recaudit/diagnostics.hpp"
#include "recaudit/evaluator.hpp"

namespace recaudit {

using Json = nlohmann::ordered_json;

// Shortest text that parses back to the same double.
std::string format_number(double value);

// "model,sampler,cutoff,recall,mrr", one row per report and cutoff.
void write_metrics_csv(std::span<const MetricReport> reports, std::ostream& out);
// Inverse of write_metrics_csv; rows are grouped back into reports in order of
// first appearance. Only the CSV fields are filled in.
std::vector<MetricReport> read_metrics_csv(std::istream& in);

// "model_a,model_b,metric,sampler,cutoff,relative_difference" (empty when undefined).
void write_crossings_csv(std::span<const CrossingReport> reports, std::ostream& out);

void write_transition_rate_csv(std::span<const DailyTransitionRate> rates, std::ostream& out);

struct DiagnosticsBundle {
  std::optional<CollisionReport> collisions;
  bool collision_hazard = false;
  std::vector<DailyTransitionRate> transition_rate;
  std::optional<OverlapReport> overlap;
  std::optional<SequentialityReport> sequentiality;
  Json skipped = Json::object();  // diagnostic name -> reason

  bool empty() const;
};

// Sections without data are left out rather than written as null.
Json to_json(const DiagnosticsBundle& d);

// Everything a run can emit, keyed by producing stage.
struct ReportSet {
  std::optional<Json> ingest;
  std::optional<Json> preprocess;
  std::optional<Json> split;
  DiagnosticsBundle diagnostics;
  std::vector<MetricReport> metrics;
  std::vector<CrossingReport> crossings;
};

struct EmittedFile {
  std::string stage;
  std::string path;  // relative to the output directory
};

// Writes the JSON and/or CSV projections of `reports` into `dir` and returns
// what was written. Throws std::runtime_error when a file cannot be written.
std::vector<EmittedFile> emit_reports(const ReportSet& reports, const std::string& dir, bool json, bool csv);

Json metrics_json(std::span<const MetricReport> reports, std::span<const CrossingReport> crossings);

void write_text_file(const std::string& path, const std::string& contents);
void write_json_file(const std::string& path, const Json& value);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::string& path);

}  // namespace recaudit
