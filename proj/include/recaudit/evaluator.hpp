#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "recaudit/recommenders.hpp"
#include "recaudit/sampling.hpp"
#include "recaudit/splitter.hpp"

namespace recaudit {

enum class TiePolicy { kOptimistic, kPessimistic, kRandom };

const char* to_string(TiePolicy p);
TiePolicy parse_tie_policy(const std::string& text);

struct EvalConfig {
  std::vector<std::size_t> cutoffs{1, 5, 10, 20};
  TiePolicy tie_policy = TiePolicy::kOptimistic;
  std::uint64_t master_seed = 0;
  std::size_t prefix_start = 1;
  std::size_t threads = 0;  // 0 = hardware concurrency
  // One negative panel for all cases instead of a fresh draw per case.
  bool shared_negatives = false;
  // Keep per-case ranks in the report (0 marks skipped cases).
  bool keep_ranks = false;

  void validate() const;
};

// One next-item prediction: the item at `position` of test sequence `sequence`,
// predicted from the test history plus the events before it.
struct TestCase {
  std::uint64_t case_id = 0;
  std::uint32_t sequence = 0;
  std::uint32_t position = 0;
  ItemId target = 0;
  bool scoreable = true;  // target was seen in training
};

std::vector<TestCase> enumerate_test_cases(const DatasetSplit& split, std::size_t prefix_start = 1);

// Fills `context` with the items preceding the case's target.
void case_context(const DatasetSplit& split, const TestCase& test_case, std::vector<ItemId>& context);

// Rank (1-based) of `target` among `negatives` (nullopt = every other catalog
// item). Throws DataError on a non-finite score among the candidates.
std::size_t rank_of_target(std::span<const double> scores, ItemId target,
                           std::optional<std::span<const ItemId>> negatives, TiePolicy policy,
                           std::uint64_t tie_seed = 0);

struct MetricReport {
  std::string model;
  std::string sampler;
  std::uint64_t seed = 0;
  std::string tie_policy;
  std::vector<std::size_t> cutoffs;
  std::vector<double> recall;
  std::vector<double> mrr;
  std::size_t case_count = 0;
  std::size_t skipped_unseen_target_count = 0;
  std::vector<std::uint32_t> ranks;  // only with keep_ranks

  // Timing is kept out of the JSON so reports stay reproducible.
  double seconds = 0.0;
  double scored_lists_per_second() const { return seconds > 0 ? static_cast<double>(case_count) / seconds : 0.0; }
};

nlohmann::ordered_json to_json(const MetricReport& r);
MetricReport metric_report_from_json(const nlohmann::ordered_json& j);

// Metrics over a list of ranks (0 = skipped).
void accumulate_metrics(MetricReport& report, std::span<const std::uint32_t> ranks);

MetricReport evaluate(const RecommenderModel& model, const DatasetSplit& split, const EvalConfig& cfg,
                      const SamplerSpec& sampler, const EmbeddingMatrix* embeddings = nullptr);

enum class Metric { kRecall, kMrr };
const char* to_string(Metric m);
Metric parse_metric(const std::string& text);

struct Crossing {
  std::size_t lower_cutoff = 0;
  std::size_t upper_cutoff = 0;
  int sign_before = 0;
  int sign_after = 0;
};

struct CrossingReport {
  std::string model_a;
  std::string model_b;
  std::string metric;
  std::string sampler;
  std::vector<std::size_t> cutoffs;
  std::vector<std::optional<double>> relative_difference;  // (A - B) / B
  std::vector<Crossing> crossings;
};

nlohmann::ordered_json to_json(const CrossingReport& r);

// Cutoff intervals where sign(A - B) flips. Zero differences do not count as
// a sign; a flip is reported between the last non-zero and the next opposite one.
CrossingReport crossing_analysis(const MetricReport& a, const MetricReport& b, Metric metric);

}  // namespace recaudit
