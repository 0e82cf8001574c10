#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "recaudit/embeddings.hpp"
#include "recaudit/random.hpp"
#include "recaudit/types.hpp"

namespace recaudit {

enum class SamplerKind {
  kNone,
  kUniform,
  kPopularity,
  kTopPopular,
  kSimilarEmbedding,
  kCloseEmbedding,
  kInversePopularity,
  kLeastSimilarEmbedding,
  kFarthestEmbedding,
};

const char* to_string(SamplerKind kind);

struct SamplerSpec {
  SamplerKind kind = SamplerKind::kNone;
  std::size_t count = 100;
  std::optional<double> catalog_fraction;  // "uniform:1%" sizes the sample from the catalog

  // "none", "<strategy>", "<strategy>:<count>" or "<strategy>:<percent>%".
  static SamplerSpec parse(const std::string& text);
  std::string label() const;

  // Number of negatives for a catalog of `catalog` items; throws if it leaves
  // no room for the target.
  std::size_t resolve_count(std::size_t catalog) const;
  bool needs_embeddings() const;
  // True when draws depend on the seed.
  bool stochastic() const;
};

// The eight sampling strategies, in a fixed order.
std::vector<SamplerKind> all_sampling_strategies();

struct SamplingResources {
  std::span<const double> support;  // per item, from the training side
  const EmbeddingMatrix* embeddings = nullptr;
};

// Efraimidis-Spirakis / Gumbel-top-k: picks `k` distinct indices with
// probability proportional to weight, one pass. Zero-weight indices are used
// only when fewer than `k` positive-weight ones exist, uniformly among them.
// `exclude` (if in range) is never returned. Output is sorted.
std::vector<ItemId> weighted_sample_without_replacement(std::span<const double> weights, std::size_t k,
                                                        Rng& rng, std::optional<ItemId> exclude = std::nullopt);

// `k` distinct indices uniformly from [0, n) minus `exclude`, sorted.
std::vector<ItemId> uniform_sample_without_replacement(std::size_t n, std::size_t k, Rng& rng,
                                                       std::optional<ItemId> exclude = std::nullopt);

// Negatives for `target` under `spec`: never contains the target. Pass
// `target == catalog` to sample without excluding anything.
std::vector<ItemId> sample_negatives(const SamplerSpec& spec, ItemId target, std::size_t catalog,
                                     const SamplingResources& resources, Rng& rng);

}  // namespace recaudit
