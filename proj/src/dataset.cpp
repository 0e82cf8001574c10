#include "recaudit/dataset.hpp"

#include <algorithm>
#include <limits>
#include <ostream>

namespace recaudit {

nlohmann::ordered_json to_json(const ProvenanceEntry& e) {
  return {{"step", e.step},
          {"params", e.params},
          {"events_before", e.events_before},
          {"events_after", e.events_after},
          {"sequences_before", e.sequences_before},
          {"sequences_after", e.sequences_after},
          {"items_before", e.items_before},
          {"items_after", e.items_after}};
}

std::size_t Dataset::event_count() const {
  std::size_t n = 0;
  for (const auto& s : sequences) n += s.size();
  return n;
}

std::size_t Dataset::active_item_count() const {
  return static_cast<std::size_t>(
      std::count_if(item_support.begin(), item_support.end(), [](std::size_t c) { return c > 0; }));
}

Timestamp Dataset::min_time() const {
  Timestamp t = std::numeric_limits<Timestamp>::max();
  for (const auto& s : sequences) {
    if (!s.events.empty()) t = std::min(t, s.start_time());
  }
  return t;
}

Timestamp Dataset::max_time() const {
  Timestamp t = std::numeric_limits<Timestamp>::min();
  for (const auto& s : sequences) {
    if (!s.events.empty()) t = std::max(t, s.end_time());
  }
  return t;
}

void Dataset::recount_support() {
  item_support.assign(catalog_size(), 0);
  for (const auto& s : sequences) {
    for (const auto& e : s.events) ++item_support.at(e.item);
  }
}

void write_dataset_dump(const Dataset& data, std::ostream& out) {
  out << "seq_id\titem\ttimestamp\n";
  for (const auto& s : data.sequences) {
    for (const auto& e : s.events) {
      out << s.seq_id << '\t' << data.items->id(e.item) << '\t' << e.timestamp << '\n';
    }
  }
}

}  // namespace recaudit
