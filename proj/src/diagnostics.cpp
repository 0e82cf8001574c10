#include "recaudit/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include <fmt/core.h>

namespace recaudit {

namespace {

constexpr std::uint64_t transition_key(ItemId a, ItemId b) {
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

std::optional<double> relative_change(double reference, double other) {
  if (reference == 0.0) return std::nullopt;
  return (other - reference) / reference;
}

nlohmann::ordered_json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

CollisionReport collision_stats(const EventLog& log) {
  CollisionReport r;
  if (!log.empty()) r.resolution = detect_timestamp_resolution(log);
  for (const auto& g : log.groups) {
    // Events are sorted by timestamp within a group, so equal stamps are adjacent.
    std::size_t i = 0;
    while (i < g.events.size()) {
      std::size_t j = i + 1;
      while (j < g.events.size() && g.events[j].timestamp == g.events[i].timestamp) ++j;
      const std::size_t size = j - i;
      ++r.pairs;
      r.events += size;
      if (size >= 2) {
        ++r.colliding_pairs;
        r.colliding_events += size;
        ++r.collision_sizes[size];
      }
      i = j;
    }
  }
  if (r.pairs > 0) r.colliding_pair_fraction = static_cast<double>(r.colliding_pairs) / static_cast<double>(r.pairs);
  if (r.events > 0) r.colliding_event_fraction = static_cast<double>(r.colliding_events) / static_cast<double>(r.events);
  return r;
}

bool collision_hazard(const CollisionReport& r, double threshold) {
  return r.resolution == TimestampResolution::kDays && r.colliding_event_fraction > threshold;
}

nlohmann::ordered_json to_json(const CollisionReport& r) {
  nlohmann::ordered_json sizes = nlohmann::ordered_json::array();
  for (const auto& [size, count] : r.collision_sizes) sizes.push_back({{"size", size}, {"pairs", count}});
  return {{"timestamp_resolution", to_string(r.resolution)},
          {"events", r.events},
          {"entity_timestamp_pairs", r.pairs},
          {"colliding_pairs", r.colliding_pairs},
          {"colliding_events", r.colliding_events},
          {"colliding_pair_fraction", r.colliding_pair_fraction},
          {"colliding_event_fraction", r.colliding_event_fraction},
          {"collision_sizes", sizes}};
}

const char* to_string(TransitionDenominator d) {
  switch (d) {
    case TransitionDenominator::kActiveSequences: return "active_sequences";
    case TransitionDenominator::kStartingSequences: return "starting_sequences";
    case TransitionDenominator::kDistinctTransitions: return "distinct_transitions";
  }
  return "?";
}

TransitionDenominator parse_transition_denominator(const std::string& text) {
  if (text == "active_sequences") return TransitionDenominator::kActiveSequences;
  if (text == "starting_sequences") return TransitionDenominator::kStartingSequences;
  if (text == "distinct_transitions") return TransitionDenominator::kDistinctTransitions;
  throw std::invalid_argument(fmt::format("unknown transition-rate denominator '{}'", text));
}

std::vector<DailyTransitionRate> new_transition_rate(const Dataset& data, TransitionDenominator denominator) {
  if (data.event_count() == 0) throw DataError("new-transition rate needs a non-empty dataset");
  const std::int64_t first = day_of(data.min_time());
  const std::int64_t last = day_of(data.max_time());
  if (last - first + 1 < 2) throw DataError("new-transition rate needs data spanning at least 2 days");
  const auto days = static_cast<std::size_t>(last - first + 1);

  std::unordered_map<std::uint64_t, std::int64_t> first_seen;
  std::vector<std::unordered_set<std::uint64_t>> distinct_per_day(
      denominator == TransitionDenominator::kDistinctTransitions ? days : 0);
  std::vector<std::size_t> active(days, 0);
  std::vector<std::size_t> starting(days, 0);
  for (const auto& s : data.sequences) {
    if (s.events.empty()) continue;
    ++starting[static_cast<std::size_t>(day_of(s.start_time()) - first)];
    std::int64_t previous_day = std::numeric_limits<std::int64_t>::min();
    for (std::size_t p = 0; p < s.size(); ++p) {
      const std::int64_t d = day_of(s.events[p].timestamp) - first;
      if (d != previous_day) {
        ++active[static_cast<std::size_t>(d)];
        previous_day = d;
      }
      if (p == 0) continue;
      const auto key = transition_key(s.events[p - 1].item, s.events[p].item);
      auto [it, inserted] = first_seen.emplace(key, d);
      if (!inserted && d < it->second) it->second = d;
      if (!distinct_per_day.empty()) distinct_per_day[static_cast<std::size_t>(d)].insert(key);
    }
  }
  std::vector<std::size_t> fresh(days, 0);
  for (const auto& [key, d] : first_seen) ++fresh[static_cast<std::size_t>(d)];

  std::vector<DailyTransitionRate> out(days);
  for (std::size_t d = 0; d < days; ++d) {
    out[d].day = static_cast<std::int64_t>(d);
    out[d].new_transitions = fresh[d];
    switch (denominator) {
      case TransitionDenominator::kActiveSequences: out[d].denominator = active[d]; break;
      case TransitionDenominator::kStartingSequences: out[d].denominator = starting[d]; break;
      case TransitionDenominator::kDistinctTransitions: out[d].denominator = distinct_per_day[d].size(); break;
    }
    out[d].rate = out[d].denominator > 0 ? static_cast<double>(fresh[d]) / static_cast<double>(out[d].denominator) : 0.0;
  }
  return out;
}

OverlapReport transition_overlap(const DatasetSplit& split) {
  std::unordered_set<std::uint64_t> train;
  for (const auto& s : split.train.sequences) {
    for (std::size_t p = 1; p < s.size(); ++p) train.insert(transition_key(s.events[p - 1].item, s.events[p].item));
  }
  OverlapReport r;
  std::unordered_set<std::uint64_t> distinct;
  for (std::size_t s = 0; s < split.test.sequences.size(); ++s) {
    const auto& seq = split.test.sequences[s];
    const auto* history = s < split.test_history.size() ? &split.test_history[s] : nullptr;
    for (std::size_t p = 0; p < seq.size(); ++p) {
      ItemId from;
      if (p > 0) {
        from = seq.events[p - 1].item;
      } else if (history != nullptr && !history->empty()) {
        from = history->back();
      } else {
        continue;
      }
      const auto key = transition_key(from, seq.events[p].item);
      ++r.test_transitions;
      if (train.contains(key)) ++r.shared_transitions;
      distinct.insert(key);
    }
  }
  if (r.test_transitions == 0) throw DataError("test side has no transitions");
  r.distinct_test_transitions = distinct.size();
  for (auto key : distinct) r.distinct_shared_transitions += train.contains(key);
  r.occurrence_fraction = static_cast<double>(r.shared_transitions) / static_cast<double>(r.test_transitions);
  r.distinct_fraction =
      static_cast<double>(r.distinct_shared_transitions) / static_cast<double>(r.distinct_test_transitions);
  return r;
}

nlohmann::ordered_json to_json(const OverlapReport& r) {
  return {{"test_transitions", r.test_transitions},
          {"shared_transitions", r.shared_transitions},
          {"occurrence_fraction", r.occurrence_fraction},
          {"distinct_test_transitions", r.distinct_test_transitions},
          {"distinct_shared_transitions", r.distinct_shared_transitions},
          {"distinct_fraction", r.distinct_fraction}};
}

SequentialityReport sequentiality_probe(const DatasetSplit& split, const SequentialityConfig& cfg) {
  const auto sequential = fit_markov(split.train, cfg.markov_smoothing);
  const auto agnostic = fit_cooccurrence(split.train, cfg.cooccurrence_window, false);
  EvalConfig eval;
  eval.cutoffs = cfg.cutoffs;
  eval.master_seed = cfg.seed;
  eval.threads = cfg.threads;
  const SamplerSpec full;
  SequentialityReport r;
  r.sequential = evaluate(*sequential, split, eval, full);
  r.order_agnostic = evaluate(*agnostic, split, eval, full);
  for (std::size_t c = 0; c < cfg.cutoffs.size(); ++c) {
    r.recall_change.push_back(relative_change(r.sequential.recall[c], r.order_agnostic.recall[c]));
    r.mrr_change.push_back(relative_change(r.sequential.mrr[c], r.order_agnostic.mrr[c]));
  }
  // Verdict at the requested cutoff, or the largest one available below it.
  std::size_t at = 0;
  for (std::size_t c = 0; c < cfg.cutoffs.size(); ++c) {
    if (cfg.cutoffs[c] <= cfg.verdict_cutoff) at = c;
  }
  const auto change = r.recall_change[at];
  r.verdict = change && std::abs(*change) < cfg.weak_signal_threshold ? "weak_sequential_signal" : "sequential_signal";
  return r;
}

nlohmann::ordered_json to_json(const SequentialityReport& r) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (std::size_t c = 0; c < r.sequential.cutoffs.size(); ++c) {
    rows.push_back({{"cutoff", r.sequential.cutoffs[c]},
                    {"sequential_recall", r.sequential.recall[c]},
                    {"order_agnostic_recall", r.order_agnostic.recall[c]},
                    {"recall_relative_change", optional_json(r.recall_change[c])},
                    {"sequential_mrr", r.sequential.mrr[c]},
                    {"order_agnostic_mrr", r.order_agnostic.mrr[c]},
                    {"mrr_relative_change", optional_json(r.mrr_change[c])}});
  }
  return {{"sequential_model", r.sequential.model},
          {"order_agnostic_model", r.order_agnostic.model},
          {"case_count", r.sequential.case_count},
          {"cutoffs", rows},
          {"verdict", r.verdict}};
}

}  // namespace recaudit
