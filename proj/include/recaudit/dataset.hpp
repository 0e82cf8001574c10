#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "recaudit/event_store.hpp"
#include "recaudit/types.hpp"

namespace recaudit {

struct SequenceEvent {
  ItemId item = 0;
  Timestamp timestamp = 0;

  friend bool operator==(const SequenceEvent&, const SequenceEvent&) = default;
};

struct Sequence {
  std::uint64_t seq_id = 0;
  std::vector<SequenceEvent> events;

  Timestamp start_time() const { return events.empty() ? 0 : events.front().timestamp; }
  Timestamp end_time() const { return events.empty() ? 0 : events.back().timestamp; }
  std::size_t size() const { return events.size(); }

  friend bool operator==(const Sequence&, const Sequence&) = default;
};

// One applied pipeline step with before/after sizes.
struct ProvenanceEntry {
  std::string step;
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
  std::size_t events_before = 0;
  std::size_t events_after = 0;
  std::size_t sequences_before = 0;
  std::size_t sequences_after = 0;
  std::size_t items_before = 0;
  std::size_t items_after = 0;
};

nlohmann::ordered_json to_json(const ProvenanceEntry& entry);

struct Dataset {
  std::vector<Sequence> sequences;
  std::shared_ptr<const ItemIndex> items = std::make_shared<const ItemIndex>();
  std::vector<std::size_t> item_support;  // occurrences per item index
  std::vector<ProvenanceEntry> provenance;

  std::size_t catalog_size() const { return items->size(); }
  std::size_t event_count() const;
  // Items with non-zero support.
  std::size_t active_item_count() const;
  Timestamp min_time() const;
  Timestamp max_time() const;

  void recount_support();
};

// Tab-separated "seq_id\titem\ttimestamp" rows in sequence order.
void write_dataset_dump(const Dataset& data, std::ostream& out);

}  // namespace recaudit
