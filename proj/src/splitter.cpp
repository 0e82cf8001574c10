#include "recaudit/splitter.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>

#include <fmt/core.h>

#include "recaudit/random.hpp"

namespace recaudit {

namespace {

SideStats side_stats(const Dataset& d) {
  SideStats s;
  s.events = d.event_count();
  s.sequences = d.sequences.size();
  if (s.events > 0) s.days = static_cast<std::size_t>(day_of(d.max_time()) - day_of(d.min_time()) + 1);
  return s;
}

DatasetSplit make_split(const Dataset& data, const SplitSpec& spec) {
  DatasetSplit split;
  split.spec = spec;
  split.train.items = data.items;
  split.test.items = data.items;
  split.train.provenance = data.provenance;
  return split;
}

void finish(DatasetSplit& split) {
  split.train.recount_support();
  split.test.recount_support();
  if (split.test_history.size() != split.test.sequences.size()) {
    split.test_history.resize(split.test.sequences.size());
  }
  if (split.train.sequences.empty()) throw DataError("split produced an empty train set");
  if (split.test.sequences.empty()) throw DataError("split produced an empty test set");
  refresh_stats(split);
}

}  // namespace

Selection parse_selection(const std::string& text, std::uint64_t seed) {
  if (text == "all") return Selection::all();
  const auto colon = text.find(':');
  if (colon != std::string::npos) {
    const std::string kind = text.substr(0, colon);
    const std::size_t k = std::stoul(text.substr(colon + 1));
    if (kind == "most_recent") return Selection::most_recent(k);
    if (kind == "random") return Selection::random(k, seed);
  }
  throw std::invalid_argument(fmt::format("bad selection '{}' (all | most_recent:K | random:K)", text));
}

std::string to_string(const Selection& s) {
  switch (s.kind) {
    case Selection::Kind::kAll: return "all";
    case Selection::Kind::kMostRecent: return fmt::format("most_recent:{}", s.k);
    case Selection::Kind::kRandom: return fmt::format("random:{}", s.k);
  }
  return "?";
}

const char* to_string(SplitStrategy s) {
  switch (s) {
    case SplitStrategy::kTime: return "time";
    case SplitStrategy::kLeaveOneOut: return "leave_one_out";
    case SplitStrategy::kRandom: return "random";
  }
  return "?";
}

nlohmann::ordered_json to_json(const SplitStats& s) {
  return {{"train", {{"events", s.train.events}, {"sequences", s.train.sequences}, {"days", s.train.days}}},
          {"test", {{"events", s.test.events}, {"sequences", s.test.sequences}, {"days", s.test.days}}},
          {"items", s.items},
          {"test_cases", s.test_cases},
          {"unseen_test_targets", s.unseen_test_targets},
          {"dropped_short_train", s.dropped_short_train}};
}

void refresh_stats(DatasetSplit& split) {
  split.stats.train = side_stats(split.train);
  split.stats.test = side_stats(split.test);
  split.stats.items = split.train.catalog_size();
  split.stats.test_cases = 0;
  split.stats.unseen_test_targets = 0;
  for (std::size_t s = 0; s < split.test.sequences.size(); ++s) {
    const auto& seq = split.test.sequences[s];
    const std::size_t history = split.test_history[s].size();
    for (std::size_t p = 0; p < seq.size(); ++p) {
      if (history + p < 1) continue;
      ++split.stats.test_cases;
      if (split.train.item_support[seq.events[p].item] == 0) ++split.stats.unseen_test_targets;
    }
  }
}

DatasetSplit time_split(const Dataset& data, Timestamp split_time, std::size_t min_seq_len) {
  SplitSpec spec;
  spec.strategy = SplitStrategy::kTime;
  spec.split_time = split_time;
  spec.min_seq_len = min_seq_len;
  DatasetSplit split = make_split(data, spec);
  split.split_time = split_time;
  for (const auto& seq : data.sequences) {
    if (seq.events.empty()) continue;
    if (seq.start_time() > split_time) {
      split.test.sequences.push_back(seq);
      continue;
    }
    Sequence cut;
    cut.seq_id = seq.seq_id;
    for (const auto& e : seq.events) {
      if (e.timestamp <= split_time) cut.events.push_back(e);
    }
    if (cut.size() < min_seq_len) {
      ++split.stats.dropped_short_train;
      continue;
    }
    split.train.sequences.push_back(std::move(cut));
  }
  finish(split);
  return split;
}

Timestamp choose_split_time(const Dataset& data, std::size_t target_test_days) {
  if (target_test_days < 1) throw std::invalid_argument("target_test_days must be >= 1");
  if (data.event_count() == 0) throw DataError("cannot choose a split time for an empty dataset");
  const auto first_day = day_of(data.min_time());
  const auto last_day = day_of(data.max_time());
  const auto span = static_cast<std::size_t>(last_day - first_day + 1);
  if (target_test_days >= span) {
    throw DataError(fmt::format("dataset spans {} days; cannot hold out {} test days", span,
                                target_test_days));
  }
  return day_start(last_day + 1 - static_cast<std::int64_t>(target_test_days));
}

DatasetSplit leave_one_out_split(const Dataset& data, const Selection& selection) {
  const std::size_t n = data.sequences.size();
  std::vector<bool> selected(n, selection.kind == Selection::Kind::kAll);
  if (selection.kind != Selection::Kind::kAll) {
    if (selection.k > n) {
      throw DataError(fmt::format("cannot select {} sequences out of {}", selection.k, n));
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    if (selection.kind == Selection::Kind::kMostRecent) {
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto ta = data.sequences[a].start_time();
        const auto tb = data.sequences[b].start_time();
        if (ta != tb) return ta > tb;
        return a > b;
      });
    } else {
      Rng rng(selection.seed);
      for (std::size_t i = 0; i < selection.k; ++i) {
        std::swap(order[i], order[i + rng.below(n - i)]);
      }
    }
    for (std::size_t i = 0; i < selection.k; ++i) selected[order[i]] = true;
  }

  SplitSpec spec;
  spec.strategy = SplitStrategy::kLeaveOneOut;
  spec.selection = selection;
  DatasetSplit split = make_split(data, spec);
  split.leaks_time = true;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& seq = data.sequences[i];
    if (!selected[i] || seq.size() < 2) {
      split.train.sequences.push_back(seq);
      continue;
    }
    Sequence prefix{seq.seq_id, {seq.events.begin(), seq.events.end() - 1}};
    Sequence target{seq.seq_id, {seq.events.back()}};
    std::vector<ItemId> history;
    history.reserve(prefix.size());
    for (const auto& e : prefix.events) history.push_back(e.item);
    split.train.sequences.push_back(std::move(prefix));
    split.test.sequences.push_back(std::move(target));
    split.test_history.push_back(std::move(history));
  }
  finish(split);
  return split;
}

DatasetSplit random_split(const Dataset& data, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw std::invalid_argument("fraction must be in (0, 1)");
  SplitSpec spec;
  spec.strategy = SplitStrategy::kRandom;
  spec.fraction = fraction;
  spec.seed = seed;
  DatasetSplit split = make_split(data, spec);
  split.leaks_time = true;
  Rng rng(seed);
  for (const auto& seq : data.sequences) {
    (rng.bernoulli(fraction) ? split.test : split.train).sequences.push_back(seq);
  }
  finish(split);
  return split;
}

DatasetSplit truncate_training_window(const DatasetSplit& split, std::size_t window_days) {
  if (window_days < 1) throw std::invalid_argument("window_days must be >= 1");
  const Timestamp ref = split.split_time.value_or(split.train.max_time());
  const Timestamp start = ref - static_cast<Timestamp>(window_days) * kSecondsPerDay;
  DatasetSplit out = split;
  out.train.sequences.clear();
  for (const auto& seq : split.train.sequences) {
    Sequence cut{seq.seq_id, {}};
    for (const auto& e : seq.events) {
      if (e.timestamp >= start) cut.events.push_back(e);
    }
    if (cut.size() < split.spec.min_seq_len) {
      ++out.stats.dropped_short_train;
      continue;
    }
    out.train.sequences.push_back(std::move(cut));
  }
  ProvenanceEntry entry;
  entry.step = "truncate_training_window";
  entry.params = {{"window_days", window_days}, {"window_start", start}};
  entry.events_before = split.train.event_count();
  entry.sequences_before = split.train.sequences.size();
  entry.items_before = split.train.active_item_count();
  out.train.recount_support();
  entry.events_after = out.train.event_count();
  entry.sequences_after = out.train.sequences.size();
  entry.items_after = out.train.active_item_count();
  out.train.provenance.push_back(std::move(entry));
  finish(out);
  return out;
}

DatasetSplit apply_split(const Dataset& data, const SplitSpec& spec) {
  DatasetSplit split;
  switch (spec.strategy) {
    case SplitStrategy::kTime: {
      const Timestamp t = spec.split_time ? *spec.split_time : choose_split_time(data, spec.test_days);
      split = time_split(data, t, spec.min_seq_len);
      break;
    }
    case SplitStrategy::kLeaveOneOut:
      split = leave_one_out_split(data, spec.selection);
      break;
    case SplitStrategy::kRandom:
      split = random_split(data, spec.fraction, spec.seed);
      break;
  }
  split.spec = spec;
  return split;
}

DatasetSplit make_validation(const Dataset& train, const SplitSpec& spec) {
  SplitSpec inner = spec;
  if (inner.strategy == SplitStrategy::kTime) inner.split_time.reset();
  return apply_split(train, inner);
}

DatasetSplit matched_leave_one_out(const Dataset& data, const DatasetSplit& reference) {
  return leave_one_out_split(data, Selection::most_recent(reference.stats.test_cases));
}

}  // namespace recaudit
