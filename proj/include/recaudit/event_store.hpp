#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "recaudit/types.hpp"

namespace recaudit {

struct RawEvent {
  std::string entity;
  std::string item;
  Timestamp timestamp = 0;
  std::string type;  // empty when the source has no event-type column
};

enum class TimestampResolution { kSeconds, kDays };

const char* to_string(TimestampResolution r);

// Dense index over item ids. Index order is insertion order.
class ItemIndex {
 public:
  ItemIndex() = default;
  explicit ItemIndex(std::vector<std::string> ids);

  // Returns the existing index or appends a new one.
  ItemId intern(std::string_view id);
  std::optional<ItemId> find(std::string_view id) const;
  const std::string& id(ItemId index) const { return reverse_.at(index); }
  std::size_t size() const { return reverse_.size(); }
  const std::vector<std::string>& ids() const { return reverse_; }

 private:
  std::unordered_map<std::string, ItemId> forward_;
  std::vector<std::string> reverse_;
};

// One entity's events ordered by (timestamp, input order).
struct EntityGroup {
  std::string entity;
  std::vector<RawEvent> events;
};

struct EventLog {
  std::vector<EntityGroup> groups;  // ordered by entity id (byte order)
  TimestampResolution resolution = TimestampResolution::kSeconds;
  bool has_event_type = false;
  std::size_t rows_read = 0;
  std::size_t rows_rejected = 0;
  std::vector<std::string> rejected_samples;  // first few offenders

  std::size_t event_count() const;
  bool empty() const { return event_count() == 0; }
};

struct ColumnMapping {
  std::string entity = "entity";
  std::string item = "item";
  std::string time = "timestamp";
  std::optional<std::string> type;
};

enum class Delimiter { kAuto, kComma, kTab };

struct IngestOptions {
  ColumnMapping columns;
  Delimiter delimiter = Delimiter::kAuto;
  double max_reject_fraction = 0.01;
};

// Parses "1700000000" as epoch seconds, "2023-11-14" as midnight UTC and
// "2023-11-14T22:13:20[Z]" / "2023-11-14 22:13:20" as UTC date-times.
std::optional<Timestamp> parse_timestamp(std::string_view text);

// Builds an EventLog from an already-materialized list (input order = list order).
EventLog build_event_log(std::vector<RawEvent> events, bool has_event_type);

EventLog ingest_csv(std::istream& source, const IngestOptions& options);

// Opens a plain or gzip-compressed (".gz") file and ingests it.
EventLog ingest_file(const std::string& path, const IngestOptions& options);

// Throws DataError on an empty log.
TimestampResolution detect_timestamp_resolution(const EventLog& log);

// Tab-separated "entity\titem\ttimestamp\ttype" with a header row, in
// (entity, timestamp, input order) order. Re-ingesting it reproduces the log.
void write_canonical_dump(const EventLog& log, std::ostream& out);

}  // namespace recaudit
