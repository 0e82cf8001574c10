#include "recaudit/preprocess.hpp"

#include <algorithm>

#include <fmt/core.h>

namespace recaudit {

namespace {

std::size_t distinct_items(const EventLog& log) {
  std::unordered_map<std::string_view, bool> seen;
  for (const auto& g : log.groups) {
    for (const auto& e : g.events) seen.emplace(e.item, true);
  }
  return seen.size();
}

ProvenanceEntry snapshot_before(std::string step, const Dataset& d) {
  ProvenanceEntry e;
  e.step = std::move(step);
  e.events_before = d.event_count();
  e.sequences_before = d.sequences.size();
  e.items_before = d.active_item_count();
  return e;
}

void snapshot_after(ProvenanceEntry& e, const Dataset& d) {
  e.events_after = d.event_count();
  e.sequences_after = d.sequences.size();
  e.items_after = d.active_item_count();
}

// Drops zero-support items from the index and renumbers the rest, keeping
// their relative order.
void compact_index(Dataset& data) {
  std::vector<ItemId> remap(data.catalog_size(), 0);
  std::vector<std::string> kept;
  for (std::size_t i = 0; i < data.catalog_size(); ++i) {
    if (data.item_support[i] > 0) {
      remap[i] = static_cast<ItemId>(kept.size());
      kept.push_back(data.items->id(static_cast<ItemId>(i)));
    }
  }
  if (kept.size() == data.catalog_size()) return;
  for (auto& s : data.sequences) {
    for (auto& e : s.events) e.item = remap[e.item];
  }
  data.items = std::make_shared<const ItemIndex>(std::move(kept));
  data.recount_support();
}

}  // namespace

void PipelineConfig::validate() const {
  if (gap_seconds <= 0) throw std::invalid_argument("preprocess.gap_seconds must be > 0");
  if (min_seq_len < 2) throw std::invalid_argument("preprocess.min_seq_len must be >= 2");
  if (min_item_support < 1) throw std::invalid_argument("preprocess.min_item_support must be >= 1");
}

const char* to_string(SessionMode mode) {
  switch (mode) {
    case SessionMode::kByEntity: return "by_entity";
    case SessionMode::kBySessionColumn: return "by_session_column";
    case SessionMode::kGap: return "gap";
  }
  return "?";
}

SessionMode parse_session_mode(const std::string& text) {
  if (text == "by_entity") return SessionMode::kByEntity;
  if (text == "by_session_column") return SessionMode::kBySessionColumn;
  if (text == "gap") return SessionMode::kGap;
  throw std::invalid_argument(fmt::format("unknown session mode '{}'", text));
}

FilteredLog filter_event_type(const EventLog& log, const std::string& keep) {
  FilteredLog out;
  if (!log.has_event_type) {
    out.log = log;
    out.warning = fmt::format("event-type filter '{}' ignored: log has no event-type column", keep);
    return out;
  }
  out.log.resolution = log.resolution;
  out.log.has_event_type = true;
  out.log.rows_read = log.rows_read;
  out.log.rows_rejected = log.rows_rejected;
  out.log.rejected_samples = log.rejected_samples;
  for (const auto& g : log.groups) {
    EntityGroup kept{g.entity, {}};
    for (const auto& e : g.events) {
      if (e.type == keep) kept.events.push_back(e);
    }
    if (!kept.events.empty()) out.log.groups.push_back(std::move(kept));
  }
  if (out.log.empty()) {
    out.warning = fmt::format("event-type filter '{}' matched no events", keep);
  } else {
    out.log.resolution = detect_timestamp_resolution(out.log);
  }
  return out;
}

Dataset sessionize(const EventLog& log, const PipelineConfig& cfg) {
  cfg.validate();
  if (cfg.session_mode == SessionMode::kGap && log.resolution == TimestampResolution::kDays &&
      cfg.gap_seconds < kSecondsPerDay) {
    throw DataError(fmt::format(
        "gap sessionization with {}s gap on day-resolution timestamps cannot detect gaps; "
        "inspect the collision diagnostics before treating this data as sequential",
        cfg.gap_seconds));
  }
  ItemIndex index;
  Dataset data;
  std::uint64_t next_id = 0;
  for (const auto& g : log.groups) {
    Sequence current;
    for (const auto& e : g.events) {
      const ItemId item = index.intern(e.item);
      if (cfg.session_mode == SessionMode::kGap && !current.events.empty() &&
          e.timestamp - current.events.back().timestamp > cfg.gap_seconds) {
        current.seq_id = next_id++;
        data.sequences.push_back(std::move(current));
        current = Sequence{};
      }
      current.events.push_back({item, e.timestamp});
    }
    if (!current.events.empty()) {
      current.seq_id = next_id++;
      data.sequences.push_back(std::move(current));
    }
  }
  data.items = std::make_shared<const ItemIndex>(std::move(index));
  data.recount_support();

  ProvenanceEntry entry;
  entry.step = "sessionize";
  entry.params = {{"mode", to_string(cfg.session_mode)}};
  if (cfg.session_mode == SessionMode::kGap) entry.params["gap_seconds"] = cfg.gap_seconds;
  entry.events_before = log.event_count();
  entry.sequences_before = log.groups.size();
  entry.items_before = distinct_items(log);
  snapshot_after(entry, data);
  data.provenance.push_back(std::move(entry));
  return data;
}

Sequence collapse_repeats(const Sequence& seq) {
  Sequence out;
  out.seq_id = seq.seq_id;
  out.events.reserve(seq.events.size());
  for (const auto& e : seq.events) {
    if (out.events.empty() || out.events.back().item != e.item) out.events.push_back(e);
  }
  return out;
}

Dataset iterative_support_filter(Dataset data, const PipelineConfig& cfg) {
  cfg.validate();
  data.recount_support();
  std::vector<ProvenanceEntry> iterations;
  for (std::size_t iteration = 1;; ++iteration) {
    ProvenanceEntry entry = snapshot_before("support_filter", data);
    entry.params = {{"iteration", iteration},
                    {"min_seq_len", cfg.min_seq_len},
                    {"min_item_support", cfg.min_item_support}};
    bool changed = false;

    const auto before = data.sequences.size();
    std::erase_if(data.sequences, [&](const Sequence& s) { return s.size() < cfg.min_seq_len; });
    changed |= data.sequences.size() != before;
    data.recount_support();

    std::vector<bool> drop(data.catalog_size(), false);
    bool any_drop = false;
    for (std::size_t i = 0; i < data.catalog_size(); ++i) {
      if (data.item_support[i] > 0 && data.item_support[i] < cfg.min_item_support) {
        drop[i] = true;
        any_drop = true;
      }
    }
    if (any_drop) {
      changed = true;
      for (auto& s : data.sequences) {
        const auto n = s.events.size();
        std::erase_if(s.events, [&](const SequenceEvent& e) { return drop[e.item]; });
        if (s.events.size() != n) s = collapse_repeats(s);
      }
      data.recount_support();
    }

    snapshot_after(entry, data);
    iterations.push_back(entry);
    data.provenance.push_back(std::move(entry));

    if (data.sequences.empty() || data.event_count() == 0) {
      std::string msg = "support filter removed every sequence:";
      for (const auto& it : iterations) {
        msg += fmt::format("\n  iteration {}: events {}->{}, sequences {}->{}, items {}->{}",
                           it.params["iteration"].get<std::size_t>(), it.events_before,
                           it.events_after, it.sequences_before, it.sequences_after,
                           it.items_before, it.items_after);
      }
      throw EmptyDatasetError(msg, data.provenance);
    }
    if (!changed) break;
  }
  compact_index(data);
  return data;
}

Dataset run_preprocess(const EventLog& log, const PipelineConfig& cfg) {
  cfg.validate();
  std::vector<ProvenanceEntry> leading;
  const EventLog* source = &log;
  FilteredLog filtered;
  if (cfg.keep_event_type) {
    filtered = filter_event_type(log, *cfg.keep_event_type);
    ProvenanceEntry e;
    e.step = "filter_event_type";
    e.params = {{"keep", *cfg.keep_event_type}};
    if (filtered.warning) e.params["warning"] = *filtered.warning;
    e.events_before = log.event_count();
    e.events_after = filtered.log.event_count();
    e.sequences_before = log.groups.size();
    e.sequences_after = filtered.log.groups.size();
    e.items_before = distinct_items(log);
    e.items_after = distinct_items(filtered.log);
    leading.push_back(std::move(e));
    source = &filtered.log;
  }
  if (source->empty()) throw DataError("no events left to preprocess");

  Dataset data = sessionize(*source, cfg);
  data.provenance.insert(data.provenance.begin(), leading.begin(), leading.end());

  ProvenanceEntry collapse = snapshot_before("collapse_repeats", data);
  for (auto& s : data.sequences) s = collapse_repeats(s);
  data.recount_support();
  snapshot_after(collapse, data);
  data.provenance.push_back(std::move(collapse));

  return iterative_support_filter(std::move(data), cfg);
}

}  // namespace recaudit
