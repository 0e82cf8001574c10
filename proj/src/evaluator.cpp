#include "recaudit/evaluator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include <fmt/core.h>

#include "recaudit/parallel.hpp"
#include "recaudit/random.hpp"

namespace recaudit {

namespace {

constexpr std::uint64_t kSharedPanelStream = 0xffffffffffffffffULL;
constexpr std::size_t kCaseChunk = 64;

int sign_of(double x) { return (x > 0) - (x < 0); }

}  // namespace

const char* to_string(TiePolicy p) {
  switch (p) {
    case TiePolicy::kOptimistic: return "optimistic";
    case TiePolicy::kPessimistic: return "pessimistic";
    case TiePolicy::kRandom: return "random";
  }
  return "?";
}

TiePolicy parse_tie_policy(const std::string& text) {
  if (text == "optimistic") return TiePolicy::kOptimistic;
  if (text == "pessimistic") return TiePolicy::kPessimistic;
  if (text == "random") return TiePolicy::kRandom;
  throw std::invalid_argument(fmt::format("unknown tie policy '{}'", text));
}

const char* to_string(Metric m) { return m == Metric::kRecall ? "recall" : "mrr"; }

Metric parse_metric(const std::string& text) {
  if (text == "recall") return Metric::kRecall;
  if (text == "mrr") return Metric::kMrr;
  throw std::invalid_argument(fmt::format("unknown metric '{}'", text));
}

void EvalConfig::validate() const {
  if (cutoffs.empty()) throw std::invalid_argument("eval.cutoffs must not be empty");
  for (std::size_t i = 0; i < cutoffs.size(); ++i) {
    if (cutoffs[i] == 0) throw std::invalid_argument("eval.cutoffs must be positive");
    if (i > 0 && cutoffs[i] <= cutoffs[i - 1]) throw std::invalid_argument("eval.cutoffs must be strictly increasing");
  }
  if (prefix_start < 1) throw std::invalid_argument("eval.prefix_start must be >= 1");
}

std::vector<TestCase> enumerate_test_cases(const DatasetSplit& split, std::size_t prefix_start) {
  std::vector<TestCase> cases;
  std::uint64_t next = 0;
  for (std::size_t s = 0; s < split.test.sequences.size(); ++s) {
    const auto& seq = split.test.sequences[s];
    const std::size_t history = s < split.test_history.size() ? split.test_history[s].size() : 0;
    for (std::size_t p = 0; p < seq.size(); ++p) {
      if (history + p < prefix_start) continue;
      TestCase tc;
      tc.case_id = next++;
      tc.sequence = static_cast<std::uint32_t>(s);
      tc.position = static_cast<std::uint32_t>(p);
      tc.target = seq.events[p].item;
      tc.scoreable = tc.target < split.train.item_support.size() && split.train.item_support[tc.target] > 0;
      cases.push_back(tc);
    }
  }
  return cases;
}

void case_context(const DatasetSplit& split, const TestCase& tc, std::vector<ItemId>& context) {
  context.clear();
  if (tc.sequence < split.test_history.size()) {
    const auto& h = split.test_history[tc.sequence];
    context.insert(context.end(), h.begin(), h.end());
  }
  const auto& seq = split.test.sequences[tc.sequence];
  for (std::size_t p = 0; p < tc.position; ++p) context.push_back(seq.events[p].item);
}

std::size_t rank_of_target(std::span<const double> scores, ItemId target,
                           std::optional<std::span<const ItemId>> negatives, TiePolicy policy,
                           std::uint64_t tie_seed) {
  if (target >= scores.size()) throw std::invalid_argument("target outside the score vector");
  const double t = scores[target];
  if (!std::isfinite(t)) throw DataError(fmt::format("non-finite score for target item {}", target));
  std::size_t greater = 0;
  std::size_t ties = 0;
  bool finite = true;
  if (negatives) {
    for (ItemId i : *negatives) {
      if (i == target) throw std::invalid_argument("target included among negatives");
      const double v = scores[i];
      finite &= std::isfinite(v);
      greater += v > t;
      ties += v == t;
    }
  } else {
    for (double v : scores) {
      finite &= std::isfinite(v);
      greater += v > t;
      ties += v == t;
    }
    --ties;  // the target itself
  }
  if (!finite) throw DataError("non-finite score among ranking candidates");
  switch (policy) {
    case TiePolicy::kOptimistic: return 1 + greater;
    case TiePolicy::kPessimistic: return 1 + greater + ties;
    case TiePolicy::kRandom: {
      Rng rng(tie_seed);
      return 1 + greater + static_cast<std::size_t>(rng.below(ties + 1));
    }
  }
  return 1 + greater;
}

void accumulate_metrics(MetricReport& report, std::span<const std::uint32_t> ranks) {
  report.case_count = 0;
  report.skipped_unseen_target_count = 0;
  for (auto r : ranks) (r == 0 ? report.skipped_unseen_target_count : report.case_count)++;
  report.recall.assign(report.cutoffs.size(), 0.0);
  report.mrr.assign(report.cutoffs.size(), 0.0);
  if (report.case_count == 0) return;
  const double n = static_cast<double>(report.case_count);
  for (std::size_t c = 0; c < report.cutoffs.size(); ++c) {
    const std::size_t cutoff = report.cutoffs[c];
    std::size_t hits = 0;
    double reciprocal = 0.0;
    for (auto r : ranks) {
      if (r == 0 || r > cutoff) continue;
      ++hits;
      reciprocal += 1.0 / static_cast<double>(r);
    }
    report.recall[c] = static_cast<double>(hits) / n;
    report.mrr[c] = reciprocal / n;
  }
}

MetricReport evaluate(const RecommenderModel& model, const DatasetSplit& split, const EvalConfig& cfg,
                      const SamplerSpec& sampler, const EmbeddingMatrix* embeddings) {
  cfg.validate();
  const std::size_t catalog = split.train.catalog_size();
  if (model.catalog_size() != catalog) {
    throw std::invalid_argument(
        fmt::format("model scores {} items, split catalog has {}", model.catalog_size(), catalog));
  }
  if (sampler.needs_embeddings() && embeddings == nullptr) {
    throw std::invalid_argument(fmt::format("sampler {} requires embeddings", sampler.label()));
  }
  const std::vector<TestCase> cases = enumerate_test_cases(split, cfg.prefix_start);
  if (cases.empty()) throw DataError("test set has no evaluable cases");
  const std::size_t sample_count = sampler.resolve_count(catalog);

  std::vector<double> support(catalog, 0.0);
  for (std::size_t i = 0; i < catalog; ++i) support[i] = static_cast<double>(split.train.item_support[i]);
  const SamplingResources resources{support, embeddings};

  // A shared panel holds one extra item so that dropping the target (or the
  // last item when the target is absent) always leaves exactly S negatives.
  std::vector<ItemId> panel;
  const bool shared = cfg.shared_negatives && sampler.kind != SamplerKind::kNone && !sampler.needs_embeddings();
  if (shared) {
    if (sample_count + 1 >= catalog) throw std::invalid_argument("shared panel needs S + 1 < catalog size");
    SamplerSpec wider = sampler;
    wider.catalog_fraction.reset();
    wider.count = sample_count + 1;
    Rng rng(mix_seed(cfg.master_seed, kSharedPanelStream));
    panel = sample_negatives(wider, static_cast<ItemId>(catalog), catalog, resources, rng);
  }

  const auto start = std::chrono::steady_clock::now();
  std::vector<std::uint32_t> ranks(cases.size(), 0);
  parallel_chunks(cases.size(), cfg.threads, kCaseChunk, [&](std::size_t begin, std::size_t end) {
    std::vector<double> scores(catalog);
    std::vector<ItemId> context;
    std::vector<ItemId> negatives;
    for (std::size_t i = begin; i < end; ++i) {
      const TestCase& tc = cases[i];
      if (!tc.scoreable) continue;
      case_context(split, tc, context);
      model.score_all(ScoreQuery{context, tc.case_id}, scores);
      Rng rng(mix_seed(cfg.master_seed, tc.case_id));
      std::optional<std::span<const ItemId>> candidates;
      if (sampler.kind != SamplerKind::kNone) {
        if (shared) {
          negatives = panel;
          auto it = std::find(negatives.begin(), negatives.end(), tc.target);
          negatives.erase(it != negatives.end() ? it : negatives.end() - 1);
        } else {
          negatives = sample_negatives(sampler, tc.target, catalog, resources, rng);
        }
        candidates = std::span<const ItemId>(negatives);
      }
      ranks[i] = static_cast<std::uint32_t>(rank_of_target(scores, tc.target, candidates, cfg.tie_policy, rng.next()));
    }
  });
  const auto stop = std::chrono::steady_clock::now();

  MetricReport report;
  report.model = model.name();
  report.sampler = sampler.label();
  report.seed = cfg.master_seed;
  report.tie_policy = to_string(cfg.tie_policy);
  report.cutoffs = cfg.cutoffs;
  accumulate_metrics(report, ranks);
  if (report.case_count == 0) throw DataError("no test case has a target seen in training");
  report.seconds = std::chrono::duration<double>(stop - start).count();
  if (cfg.keep_ranks) report.ranks = std::move(ranks);
  return report;
}

nlohmann::ordered_json to_json(const MetricReport& r) {
  nlohmann::ordered_json metrics = nlohmann::ordered_json::array();
  for (std::size_t c = 0; c < r.cutoffs.size(); ++c) {
    metrics.push_back({{"cutoff", r.cutoffs[c]}, {"recall", r.recall[c]}, {"mrr", r.mrr[c]}});
  }
  return {{"model", r.model},
          {"sampler", r.sampler},
          {"seed", r.seed},
          {"tie_policy", r.tie_policy},
          {"case_count", r.case_count},
          {"skipped_unseen_target_count", r.skipped_unseen_target_count},
          {"metrics", metrics}};
}

MetricReport metric_report_from_json(const nlohmann::ordered_json& j) {
  MetricReport r;
  r.model = j.at("model").get<std::string>();
  r.sampler = j.at("sampler").get<std::string>();
  r.seed = j.value("seed", std::uint64_t{0});
  r.tie_policy = j.value("tie_policy", std::string("optimistic"));
  r.case_count = j.value("case_count", std::size_t{0});
  r.skipped_unseen_target_count = j.value("skipped_unseen_target_count", std::size_t{0});
  for (const auto& m : j.at("metrics")) {
    r.cutoffs.push_back(m.at("cutoff").get<std::size_t>());
    r.recall.push_back(m.at("recall").get<double>());
    r.mrr.push_back(m.at("mrr").get<double>());
  }
  return r;
}

nlohmann::ordered_json to_json(const CrossingReport& r) {
  nlohmann::ordered_json rel = nlohmann::ordered_json::array();
  for (std::size_t c = 0; c < r.cutoffs.size(); ++c) {
    nlohmann::ordered_json v = nullptr;
    if (r.relative_difference[c]) v = *r.relative_difference[c];
    rel.push_back({{"cutoff", r.cutoffs[c]}, {"relative_difference", v}});
  }
  nlohmann::ordered_json flips = nlohmann::ordered_json::array();
  for (const auto& x : r.crossings) {
    flips.push_back({{"between", {x.lower_cutoff, x.upper_cutoff}},
                     {"sign_before", x.sign_before},
                     {"sign_after", x.sign_after}});
  }
  return {{"model_a", r.model_a}, {"model_b", r.model_b}, {"metric", r.metric},
          {"sampler", r.sampler}, {"relative_difference", rel}, {"crossings", flips}};
}

CrossingReport crossing_analysis(const MetricReport& a, const MetricReport& b, Metric metric) {
  if (a.cutoffs != b.cutoffs) throw std::invalid_argument("crossing analysis needs identical cutoff grids");
  if (a.case_count + a.skipped_unseen_target_count != b.case_count + b.skipped_unseen_target_count) {
    throw std::invalid_argument("crossing analysis needs reports over the same test cases");
  }
  CrossingReport out;
  out.model_a = a.model;
  out.model_b = b.model;
  out.metric = to_string(metric);
  out.sampler = a.sampler == b.sampler ? a.sampler : a.sampler + " vs " + b.sampler;
  out.cutoffs = a.cutoffs;
  const auto& va = metric == Metric::kRecall ? a.recall : a.mrr;
  const auto& vb = metric == Metric::kRecall ? b.recall : b.mrr;
  int last_sign = 0;
  std::size_t last_cutoff = 0;
  for (std::size_t c = 0; c < out.cutoffs.size(); ++c) {
    const double diff = va[c] - vb[c];
    out.relative_difference.push_back(vb[c] != 0.0 ? std::optional<double>(diff / vb[c]) : std::nullopt);
    const int s = sign_of(diff);
    if (s == 0) continue;
    if (last_sign != 0 && s != last_sign) out.crossings.push_back({last_cutoff, out.cutoffs[c], last_sign, s});
    last_sign = s;
    last_cutoff = out.cutoffs[c];
  }
  return out;
}

}  // namespace recaudit
