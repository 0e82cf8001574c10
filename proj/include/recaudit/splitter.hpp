#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "recaudit/dataset.hpp"

namespace recaudit {

enum class SplitStrategy { kTime, kLeaveOneOut, kRandom };

struct Selection {
  enum class Kind { kAll, kMostRecent, kRandom };
  Kind kind = Kind::kAll;
  std::size_t k = 0;
  std::uint64_t seed = 0;

  static Selection all() { return {}; }
  static Selection most_recent(std::size_t k) { return {Kind::kMostRecent, k, 0}; }
  static Selection random(std::size_t k, std::uint64_t seed) { return {Kind::kRandom, k, seed}; }
};

// "all", "most_recent:K" or "random:K" (seed supplied separately).
Selection parse_selection(const std::string& text, std::uint64_t seed);
std::string to_string(const Selection& s);
const char* to_string(SplitStrategy s);

struct SplitSpec {
  SplitStrategy strategy = SplitStrategy::kTime;
  std::optional<Timestamp> split_time;  // time: explicit split instant
  std::size_t test_days = 1;            // time: used when split_time is unset
  Selection selection;                  // leave-one-out
  double fraction = 0.1;                // random
  std::uint64_t seed = 0;               // random
  std::size_t min_seq_len = 2;
};

struct SideStats {
  std::size_t events = 0;
  std::size_t sequences = 0;
  std::size_t days = 0;
};

struct SplitStats {
  SideStats train;
  SideStats test;
  std::size_t items = 0;               // catalog size of the shared index
  std::size_t test_cases = 0;          // next-item targets in the test side
  std::size_t unseen_test_targets = 0; // of those, targets never seen in train
  std::size_t dropped_short_train = 0; // truncated train sequences below min length
};

struct DatasetSplit {
  Dataset train;
  Dataset test;
  SplitSpec spec;
  std::optional<Timestamp> split_time;
  // Parallel to test.sequences: items that precede each test sequence and are
  // part of its context (the train prefix under leave-one-out, else empty).
  std::vector<std::vector<ItemId>> test_history;
  SplitStats stats;
  // Train and test overlap in time (leave-one-out, random).
  bool leaks_time = false;
};

nlohmann::ordered_json to_json(const SplitStats& stats);

// Recomputes stats from the current contents (keeps dropped_short_train).
void refresh_stats(DatasetSplit& split);

DatasetSplit time_split(const Dataset& data, Timestamp split_time, std::size_t min_seq_len = 2);

// Start of the day that begins the final `target_test_days` days of the data.
Timestamp choose_split_time(const Dataset& data, std::size_t target_test_days);

DatasetSplit leave_one_out_split(const Dataset& data, const Selection& selection);

DatasetSplit random_split(const Dataset& data, double fraction, std::uint64_t seed);

// Keeps train events within [ref - window_days, ref] where ref is the split
// time (or the last train event when the split has none).
DatasetSplit truncate_training_window(const DatasetSplit& split, std::size_t window_days);

// Applies the spec's strategy to `data` as a whole.
DatasetSplit apply_split(const Dataset& data, const SplitSpec& spec);

// Re-splits the training side with the same strategy.
DatasetSplit make_validation(const Dataset& train, const SplitSpec& spec);

// Leave-one-out over the most recent sequences with exactly as many test cases
// as `reference` has, for size-matched comparisons.
DatasetSplit matched_leave_one_out(const Dataset& data, const DatasetSplit& reference);

}  // namespace recaudit
