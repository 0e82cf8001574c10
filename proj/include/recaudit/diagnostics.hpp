#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "recaudit/dataset.hpp"
#include "recaudit/evaluator.hpp"
#include "recaudit/event_store.hpp"
#include "recaudit/splitter.hpp"

namespace recaudit {

struct CollisionReport {
  std::size_t events = 0;
  std::size_t pairs = 0;            // distinct (entity, timestamp)
  std::size_t colliding_pairs = 0;  // pairs with >= 2 events
  std::size_t colliding_events = 0; // events inside colliding pairs
  double colliding_pair_fraction = 0.0;
  double colliding_event_fraction = 0.0;
  std::map<std::size_t, std::size_t> collision_sizes;  // events per pair -> number of pairs
  TimestampResolution resolution = TimestampResolution::kSeconds;
};

CollisionReport collision_stats(const EventLog& log);
nlohmann::ordered_json to_json(const CollisionReport& r);

// True when ordering within collisions is likely artificial: day-resolution
// timestamps and more than `threshold` of events colliding.
bool collision_hazard(const CollisionReport& r, double threshold = 0.10);

enum class TransitionDenominator {
  kActiveSequences,    // sequences with an event on the day
  kStartingSequences,  // sequences starting on the day
  kDistinctTransitions // distinct transitions occurring on the day
};

const char* to_string(TransitionDenominator d);
TransitionDenominator parse_transition_denominator(const std::string& text);

struct DailyTransitionRate {
  std::int64_t day = 0;  // days since the first day of the data
  std::size_t new_transitions = 0;
  std::size_t denominator = 0;
  double rate = 0.0;
};

// Every day from the first to the last, day 0 included (where all transitions
// are new). A transition belongs to the day of its second event.
std::vector<DailyTransitionRate> new_transition_rate(
    const Dataset& data, TransitionDenominator denominator = TransitionDenominator::kActiveSequences);

struct OverlapReport {
  std::size_t test_transitions = 0;
  std::size_t shared_transitions = 0;
  std::size_t distinct_test_transitions = 0;
  std::size_t distinct_shared_transitions = 0;
  double occurrence_fraction = 0.0;
  double distinct_fraction = 0.0;
};

// Share of test transitions (context item -> target) also present among the
// adjacent train transitions.
OverlapReport transition_overlap(const DatasetSplit& split);
nlohmann::ordered_json to_json(const OverlapReport& r);

struct SequentialityConfig {
  std::vector<std::size_t> cutoffs{1, 5, 10, 20};
  double markov_smoothing = 0.0;
  std::size_t cooccurrence_window = 0;  // whole sequence
  // |relative change in recall at `verdict_cutoff`| below this reads as weak signal.
  double weak_signal_threshold = 0.05;
  std::size_t verdict_cutoff = 20;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
};

struct SequentialityReport {
  MetricReport sequential;
  MetricReport order_agnostic;
  // (order_agnostic - sequential) / sequential per cutoff; negative means the
  // order-agnostic model is worse. nullopt where the sequential value is 0.
  std::vector<std::optional<double>> recall_change;
  std::vector<std::optional<double>> mrr_change;
  std::string verdict;  // "weak_sequential_signal" | "sequential_signal"
};

SequentialityReport sequentiality_probe(const DatasetSplit& split, const SequentialityConfig& cfg);
nlohmann::ordered_json to_json(const SequentialityReport& r);

}  // namespace recaudit
