#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "recaudit/dataset.hpp"
#include "recaudit/event_store.hpp"

namespace recaudit {

enum class SessionMode { kByEntity, kBySessionColumn, kGap };

struct PipelineConfig {
  std::optional<std::string> keep_event_type;
  SessionMode session_mode = SessionMode::kByEntity;
  Timestamp gap_seconds = 3600;
  std::size_t min_seq_len = 2;
  std::size_t min_item_support = 5;

  // Throws std::invalid_argument on out-of-range values.
  void validate() const;
};

const char* to_string(SessionMode mode);
SessionMode parse_session_mode(const std::string& text);

struct FilteredLog {
  EventLog log;
  std::optional<std::string> warning;
};

FilteredLog filter_event_type(const EventLog& log, const std::string& keep);

// Groups events into sequences over a provisional item index built in order of
// first appearance. Does not collapse or filter.
Dataset sessionize(const EventLog& log, const PipelineConfig& cfg);

// Merges adjacent duplicates, keeping the first occurrence's timestamp.
Sequence collapse_repeats(const Sequence& seq);

// Thrown when the support filter removes everything. Carries the provenance
// collected so far, including one entry per fixpoint iteration.
class EmptyDatasetError : public DataError {
 public:
  EmptyDatasetError(const std::string& what, std::vector<ProvenanceEntry> report)
      : DataError(what), report_(std::move(report)) {}
  const std::vector<ProvenanceEntry>& report() const { return report_; }

 private:
  std::vector<ProvenanceEntry> report_;
};

// Alternates dropping short sequences and removing low-support items (with
// re-collapse) until neither changes anything. Rebuilds a dense item index and
// appends one provenance entry per iteration.
Dataset iterative_support_filter(Dataset data, const PipelineConfig& cfg);

// Full preprocessing: event-type filter, sessionize, collapse, support filter.
Dataset run_preprocess(const EventLog& log, const PipelineConfig& cfg);

}  // namespace recaudit
