#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <vector>

#include "recaudit/dataset.hpp"
#include "recaudit/event_store.hpp"

namespace recaudit::synthetic {

// Cyclic item chains where every item has exactly one successor. Sequences
// walk a random chain from a random offset; one sequence per `spacing` seconds.
struct ChainSpec {
  std::size_t chains = 50;
  std::size_t chain_length = 10;
  std::size_t sequences = 2000;
  std::size_t min_length = 3;
  std::size_t max_length = 8;  // <= chain_length keeps items distinct per sequence
  Timestamp start = 0;
  Timestamp spacing = 600;
  std::uint64_t seed = 1;
};

Dataset planted_chains(const ChainSpec& spec);

// Permutes the items of every sequence, timestamps stay in place.
Dataset shuffle_within_sequences(const Dataset& data, std::uint64_t seed);

// Markov sessions over `items` items. Each item has `successors` candidate
// next items; every day a `daily_drift` share of items redraw theirs, and on
// `drift_day` a `drift_fraction` share does.
struct DriftSpec {
  std::size_t items = 2000;
  std::size_t successors = 3;
  std::size_t days = 30;
  std::size_t sessions_per_day = 300;
  std::size_t min_length = 2;
  std::size_t max_length = 6;
  std::size_t drift_day = 29;
  double drift_fraction = 0.8;
  double daily_drift = 0.02;
  double start_item_skew = 1.0;  // Zipf exponent for the first item
  std::uint64_t seed = 1;
};

// Sessions as sequences (one per session, dense index "i<k>" in item order).
Dataset drifting_sessions(const DriftSpec& spec);

// Raw event log: `users` users, each active on a day with probability
// `activity`, one session per active day, plus occasional "cart" events one
// second after a view. Sessions come from the drift process above.
struct LogSpec {
  DriftSpec drift;
  std::size_t users = 2000;
  double activity = 0.15;
  double cart_probability = 0.1;
};

std::vector<RawEvent> event_log(const LogSpec& spec);

// CSV with header "user_id,item_id,timestamp,event_type".
void write_event_csv(const std::vector<RawEvent>& events, std::ostream& out);

}  // namespace recaudit::synthetic
