#include <doctest.h>

#include <sstream>

#include "recaudit/preprocess.hpp"
#include "support/fixtures.hpp"

using namespace recaudit;
using recaudit::testing::item_ids;
using recaudit::testing::make_dataset;
using recaudit::testing::seq;

namespace {

EventLog typed_log(const std::vector<std::string>& types) {
  std::vector<RawEvent> events;
  for (std::size_t i = 0; i < types.size(); ++i) {
    events.push_back({"u", "i" + std::to_string(i), static_cast<Timestamp>(i), types[i]});
  }
  return build_event_log(events, true);
}

EventLog times_log(const std::vector<std::pair<std::string, Timestamp>>& entity_times) {
  std::vector<RawEvent> events;
  std::size_t k = 0;
  for (const auto& [entity, t] : entity_times) events.push_back({entity, "i" + std::to_string(k++ % 3), t, ""});
  return build_event_log(events, false);
}

Sequence items_seq(std::vector<ItemId> items) {
  Sequence s;
  Timestamp t = 0;
  for (auto i : items) s.events.push_back({i, t++});
  return s;
}

std::vector<ItemId> items_of(const Sequence& s) {
  std::vector<ItemId> out;
  for (const auto& e : s.events) out.push_back(e.item);
  return out;
}

PipelineConfig support_cfg(std::size_t min_support, std::size_t min_len = 2) {
  PipelineConfig cfg;
  cfg.min_item_support = min_support;
  cfg.min_seq_len = min_len;
  return cfg;
}

void check_fixpoint(const Dataset& d, const PipelineConfig& cfg) {
  Dataset recount = d;
  recount.recount_support();
  CHECK(recount.item_support == d.item_support);
  for (const auto& s : d.sequences) {
    CHECK(s.size() >= cfg.min_seq_len);
    for (std::size_t p = 1; p < s.size(); ++p) CHECK(s.events[p].item != s.events[p - 1].item);
  }
  for (auto support : d.item_support) CHECK(support >= cfg.min_item_support);
}

}  // namespace

TEST_CASE("event type filter") {
  auto kept = filter_event_type(typed_log({"view", "cart", "view"}), "view");
  CHECK(kept.log.event_count() == 2);
  CHECK_FALSE(kept.warning.has_value());
  CHECK(kept.log.groups[0].events[0].item == "i0");
  CHECK(kept.log.groups[0].events[1].item == "i2");

  auto untyped = times_log({{"u", 1}, {"u", 2}});
  auto noop = filter_event_type(untyped, "view");
  CHECK(noop.log.event_count() == 2);
  CHECK(noop.warning.has_value());

  auto none = filter_event_type(typed_log({"view", "view"}), "purchase");
  CHECK(none.log.empty());
  CHECK(none.warning.has_value());
}

TEST_CASE("gap sessionization splits on gaps strictly above the threshold") {
  PipelineConfig cfg;
  cfg.session_mode = SessionMode::kGap;
  cfg.gap_seconds = 3600;
  auto d = sessionize(times_log({{"u1", 0}, {"u1", 100}, {"u1", 5000}}), cfg);
  REQUIRE(d.sequences.size() == 2);
  CHECK(d.sequences[0].size() == 2);
  CHECK(d.sequences[0].start_time() == 0);
  CHECK(d.sequences[1].size() == 1);
  CHECK(d.sequences[1].start_time() == 5000);

  auto exact = sessionize(times_log({{"u1", 0}, {"u1", 3600}}), cfg);
  CHECK(exact.sequences.size() == 1);

  auto two = sessionize(times_log({{"u1", 0}, {"u2", 10}}), cfg);
  CHECK(two.sequences.size() == 2);
  CHECK(two.provenance.size() == 1);
  CHECK(two.provenance[0].step == "sessionize");
}

TEST_CASE("entity sessionization keeps one sequence per entity") {
  PipelineConfig cfg;
  auto d = sessionize(times_log({{"u1", 0}, {"u1", 100}}), cfg);
  REQUIRE(d.sequences.size() == 1);
  CHECK(d.sequences[0].size() == 2);
  auto far = sessionize(times_log({{"u1", 0}, {"u1", 1000000}}), cfg);
  CHECK(far.sequences.size() == 1);
}

TEST_CASE("gap sessionization refuses day-resolution data") {
  PipelineConfig cfg;
  cfg.session_mode = SessionMode::kGap;
  const auto log = times_log({{"u", 0}, {"u", 86400}, {"u", 86400}});
  REQUIRE(log.resolution == TimestampResolution::kDays);
  CHECK_THROWS_WITH_AS(sessionize(log, cfg), doctest::Contains("collision"), DataError);
  cfg.gap_seconds = 2 * 86400;
  CHECK_NOTHROW(sessionize(log, cfg));
}

TEST_CASE("collapse merges adjacent repeats only, keeping the first timestamp") {
  CHECK(items_of(collapse_repeats(items_seq({0, 0, 1}))) == std::vector<ItemId>{0, 1});
  CHECK(items_of(collapse_repeats(items_seq({0, 1, 0}))) == std::vector<ItemId>{0, 1, 0});
  CHECK(items_of(collapse_repeats(items_seq({0, 0, 0, 0}))) == std::vector<ItemId>{0});
  Sequence s;
  s.events = {{4, 10}, {4, 20}, {5, 30}};
  const auto c = collapse_repeats(s);
  CHECK(c.events[0].timestamp == 10);
}

TEST_CASE("collapse is idempotent on random sequences") {
  Rng rng(99);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<ItemId> items(rng.below(20));
    for (auto& i : items) i = static_cast<ItemId>(rng.below(3));
    const auto once = collapse_repeats(items_seq(items));
    CHECK(collapse_repeats(once) == once);
    for (std::size_t p = 1; p < once.size(); ++p) CHECK(once.events[p].item != once.events[p - 1].item);
  }
}

TEST_CASE("support filter cascade ends empty with a per-iteration report") {
  auto d = make_dataset({seq({"a", "b"}), seq({"a", "b"}), seq({"a", "b"}), seq({"a", "b"}), seq({"a", "c"})});
  try {
    iterative_support_filter(d, support_cfg(5));
    FAIL("expected EmptyDatasetError");
  } catch (const EmptyDatasetError& e) {
    const auto& report = e.report();
    REQUIRE(report.size() == 2);
    // Iteration 1: b (support 4) and c (support 1) go together, every
    // sequence collapses to (a).
    CHECK(report[0].events_before == 10);
    CHECK(report[0].events_after == 5);
    CHECK(report[0].sequences_before == 5);
    CHECK(report[0].sequences_after == 5);
    CHECK(report[0].items_before == 3);
    CHECK(report[0].items_after == 1);
    // Iteration 2: all length-1 sequences are dropped.
    CHECK(report[1].events_after == 0);
    CHECK(report[1].sequences_after == 0);
    CHECK(report[1].items_after == 0);
    CHECK(std::string(e.what()).find("iteration 2") != std::string::npos);
  }
}

TEST_CASE("a valid dataset is a one-iteration fixpoint") {
  std::vector<recaudit::testing::Events> five(5, seq({"a", "b"}));
  auto d = make_dataset(five);
  auto out = iterative_support_filter(d, support_cfg(5));
  CHECK(out.sequences == d.sequences);
  CHECK(out.items->ids() == d.items->ids());
  REQUIRE(out.provenance.size() == 1);
  CHECK(out.provenance[0].params["iteration"] == 1);
  CHECK(out.provenance[0].events_before == out.provenance[0].events_after);
}

TEST_CASE("support filter removal re-collapses new neighbours and compacts the index") {
  // x sits between two a's; removing it makes them adjacent.
  std::vector<recaudit::testing::Events> seqs{seq({"a", "x", "a", "b"})};
  for (int i = 0; i < 4; ++i) seqs.push_back(seq({"a", "b"}));
  auto out = iterative_support_filter(make_dataset(seqs), support_cfg(5));
  CHECK(out.catalog_size() == 2);
  CHECK(out.items->ids() == std::vector<std::string>{"a", "b"});
  CHECK(item_ids(out, out.sequences[0]) == std::vector<std::string>{"a", "b"});
}

TEST_CASE("support filter reaches a joint fixpoint and is idempotent on random data") {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto log = recaudit::testing::random_log(seed, 40, 25, 30);
    PipelineConfig cfg = support_cfg(2 + seed % 5, 2 + seed % 2);
    Dataset out;
    try {
      out = run_preprocess(log, cfg);
    } catch (const EmptyDatasetError&) {
      continue;
    }
    check_fixpoint(out, cfg);
    auto again = iterative_support_filter(out, cfg);
    CHECK(again.sequences == out.sequences);
    CHECK(again.items->ids() == out.items->ids());
  }
}

TEST_CASE("pipeline provenance is monotone and the output deterministic") {
  const auto log = recaudit::testing::random_log(5, 60, 30, 25);
  PipelineConfig cfg = support_cfg(3);
  cfg.keep_event_type = "view";
  const auto a = run_preprocess(log, cfg);
  const auto b = run_preprocess(log, cfg);
  std::ostringstream da, db;
  write_dataset_dump(a, da);
  write_dataset_dump(b, db);
  CHECK(da.str() == db.str());

  REQUIRE(a.provenance.size() >= 4);
  CHECK(a.provenance[0].step == "filter_event_type");
  CHECK(a.provenance[1].step == "sessionize");
  CHECK(a.provenance[2].step == "collapse_repeats");
  CHECK(a.provenance[3].step == "support_filter");
  for (const auto& p : a.provenance) {
    CHECK(p.events_after <= p.events_before);
    if (p.step != "sessionize") CHECK(p.sequences_after <= p.sequences_before);
  }
  for (std::size_t i = 1; i < a.provenance.size(); ++i) {
    CHECK(a.provenance[i].events_before == a.provenance[i - 1].events_after);
  }
}

TEST_CASE("pipeline config validation") {
  PipelineConfig cfg;
  cfg.min_seq_len = 1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.min_item_support = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.gap_seconds = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
