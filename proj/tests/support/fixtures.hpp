#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "recaudit/dataset.hpp"
#include "recaudit/event_store.hpp"
#include "recaudit/random.hpp"
#include "recaudit/splitter.hpp"

namespace recaudit::testing {

using Events = std::vector<std::pair<std::string, Timestamp>>;

// Builds a dataset over the given item alphabet (index order = `catalog`
// order); unknown ids are appended in order of appearance.
inline Dataset make_dataset(const std::vector<Events>& sequences, std::vector<std::string> catalog = {}) {
  ItemIndex index(std::move(catalog));
  Dataset data;
  std::uint64_t id = 0;
  for (const auto& events : sequences) {
    Sequence s;
    s.seq_id = id++;
    for (const auto& [item, t] : events) s.events.push_back({index.intern(item), t});
    data.sequences.push_back(std::move(s));
  }
  data.items = std::make_shared<const ItemIndex>(std::move(index));
  data.recount_support();
  return data;
}

// Sequence of items with timestamps start, start + step, ...
inline Events seq(const std::vector<std::string>& items, Timestamp start = 0, Timestamp step = 10) {
  Events out;
  for (std::size_t i = 0; i < items.size(); ++i) out.emplace_back(items[i], start + static_cast<Timestamp>(i) * step);
  return out;
}

inline std::vector<std::string> item_ids(const Dataset& data, const Sequence& s) {
  std::vector<std::string> out;
  for (const auto& e : s.events) out.push_back(data.items->id(e.item));
  return out;
}

inline ItemId id_of(const Dataset& data, const std::string& item) { return *data.items->find(item); }

// A split with the listed sequences of `all` on each side (shared index).
inline DatasetSplit manual_split(const Dataset& all, const std::vector<std::size_t>& train,
                                 const std::vector<std::size_t>& test) {
  DatasetSplit split;
  split.train.items = all.items;
  split.test.items = all.items;
  for (auto i : train) split.train.sequences.push_back(all.sequences.at(i));
  for (auto i : test) split.test.sequences.push_back(all.sequences.at(i));
  split.train.recount_support();
  split.test.recount_support();
  split.test_history.resize(split.test.sequences.size());
  refresh_stats(split);
  return split;
}

// Random event log: `entities` entities, up to `max_events` each, items drawn
// from a skewed catalog of `items` ids, some repeated timestamps.
inline EventLog random_log(std::uint64_t seed, std::size_t entities, std::size_t max_events, std::size_t items) {
  Rng rng(seed);
  std::vector<RawEvent> events;
  for (std::size_t e = 0; e < entities; ++e) {
    const std::size_t n = 1 + static_cast<std::size_t>(rng.below(max_events));
    Timestamp t = static_cast<Timestamp>(rng.below(1000));
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t a = static_cast<std::size_t>(rng.below(items));
      const std::size_t b = static_cast<std::size_t>(rng.below(items));
      events.push_back({"e" + std::to_string(e), "i" + std::to_string(std::min(a, b)), t, "view"});
      if (!rng.bernoulli(0.1)) t += 1 + static_cast<Timestamp>(rng.below(5000));
    }
  }
  return build_event_log(std::move(events), true);
}

}  // namespace recaudit::testing
