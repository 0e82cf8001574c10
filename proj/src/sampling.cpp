#include "recaudit/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_set>

#include <fmt/core.h>

namespace recaudit {

namespace {

struct KindName {
  SamplerKind kind;
  const char* name;
};

constexpr KindName kKindNames[] = {
    {SamplerKind::kNone, "none"},
    {SamplerKind::kUniform, "uniform"},
    {SamplerKind::kPopularity, "popularity"},
    {SamplerKind::kTopPopular, "top_popular"},
    {SamplerKind::kSimilarEmbedding, "similar_embedding"},
    {SamplerKind::kCloseEmbedding, "close_embedding"},
    {SamplerKind::kInversePopularity, "inverse_popularity"},
    {SamplerKind::kLeastSimilarEmbedding, "least_similar_embedding"},
    {SamplerKind::kFarthestEmbedding, "farthest_embedding"},
};

// Picks the k best indices by `better`, ties broken by lower index.
template <typename Better>
std::vector<ItemId> top_k_by(std::size_t catalog, ItemId target, std::size_t k, Better better) {
  std::vector<ItemId> pool;
  pool.reserve(catalog);
  for (std::size_t i = 0; i < catalog; ++i) {
    if (i != target) pool.push_back(static_cast<ItemId>(i));
  }
  k = std::min(k, pool.size());
  auto cmp = [&](ItemId a, ItemId b) {
    if (better(a, b)) return true;
    if (better(b, a)) return false;
    return a < b;
  };
  std::nth_element(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k), pool.end(), cmp);
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

const EmbeddingMatrix& require_embeddings(const SamplingResources& r, std::size_t catalog) {
  if (r.embeddings == nullptr) throw std::invalid_argument("embedding-based sampler requires embeddings");
  if (r.embeddings->rows != catalog) {
    throw std::invalid_argument(fmt::format("embeddings cover {} items, catalog has {}", r.embeddings->rows, catalog));
  }
  return *r.embeddings;
}

}  // namespace

const char* to_string(SamplerKind kind) {
  for (const auto& kn : kKindNames) {
    if (kn.kind == kind) return kn.name;
  }
  return "?";
}

std::vector<SamplerKind> all_sampling_strategies() {
  return {SamplerKind::kUniform,           SamplerKind::kPopularity,
          SamplerKind::kTopPopular,        SamplerKind::kSimilarEmbedding,
          SamplerKind::kCloseEmbedding,    SamplerKind::kInversePopularity,
          SamplerKind::kLeastSimilarEmbedding, SamplerKind::kFarthestEmbedding};
}

SamplerSpec SamplerSpec::parse(const std::string& text) {
  const auto colon = text.find(':');
  const std::string name = text.substr(0, colon);
  SamplerSpec spec;
  bool found = false;
  for (const auto& kn : kKindNames) {
    if (name == kn.name) {
      spec.kind = kn.kind;
      found = true;
    }
  }
  if (!found) throw std::invalid_argument(fmt::format("unknown sampler '{}'", name));
  if (colon == std::string::npos) return spec;
  if (spec.kind == SamplerKind::kNone) throw std::invalid_argument("sampler 'none' takes no size");
  std::string size = text.substr(colon + 1);
  try {
    if (!size.empty() && size.back() == '%') {
      size.pop_back();
      const double pct = std::stod(size);
      if (!(pct > 0.0 && pct <= 100.0)) throw std::invalid_argument("percent");
      spec.catalog_fraction = pct / 100.0;
    } else {
      std::size_t used = 0;
      const long long n = std::stoll(size, &used);
      if (used != size.size() || n < 1) throw std::invalid_argument("count");
      spec.count = static_cast<std::size_t>(n);
    }
  } catch (const std::exception&) {
    throw std::invalid_argument(fmt::format("bad sampler size in '{}'", text));
  }
  return spec;
}

std::string SamplerSpec::label() const {
  if (kind == SamplerKind::kNone) return "none";
  if (catalog_fraction) return fmt::format("{}:{}%", to_string(kind), *catalog_fraction * 100.0);
  return fmt::format("{}:{}", to_string(kind), count);
}

std::size_t SamplerSpec::resolve_count(std::size_t catalog) const {
  if (kind == SamplerKind::kNone) return 0;
  std::size_t s = count;
  if (catalog_fraction) {
    s = static_cast<std::size_t>(std::llround(*catalog_fraction * static_cast<double>(catalog)));
    s = std::clamp<std::size_t>(s, 1, catalog > 1 ? catalog - 1 : 1);
  }
  if (s < 1 || s + 1 > catalog) {
    throw std::invalid_argument(
        fmt::format("sampler {} needs {} negatives but the catalog has only {} items", label(), s, catalog));
  }
  return s;
}

bool SamplerSpec::needs_embeddings() const {
  return kind == SamplerKind::kSimilarEmbedding || kind == SamplerKind::kCloseEmbedding ||
         kind == SamplerKind::kLeastSimilarEmbedding || kind == SamplerKind::kFarthestEmbedding;
}

bool SamplerSpec::stochastic() const {
  return kind == SamplerKind::kUniform || kind == SamplerKind::kPopularity ||
         kind == SamplerKind::kInversePopularity;
}

std::vector<ItemId> uniform_sample_without_replacement(std::size_t n, std::size_t k, Rng& rng,
                                                       std::optional<ItemId> exclude) {
  const bool excluding = exclude && *exclude < n;
  const std::size_t pool = excluding ? n - 1 : n;
  if (k > pool) throw std::invalid_argument(fmt::format("cannot draw {} of {} items", k, pool));
  // Floyd's algorithm over [0, pool), then skip past the excluded index.
  std::unordered_set<std::size_t> chosen;
  chosen.reserve(k * 2);
  std::vector<ItemId> out;
  out.reserve(k);
  for (std::size_t j = pool - k; j < pool; ++j) {
    const std::size_t t = static_cast<std::size_t>(rng.below(j + 1));
    const std::size_t pick = chosen.insert(t).second ? t : j;
    if (pick == j) chosen.insert(j);
    out.push_back(static_cast<ItemId>(excluding && pick >= *exclude ? pick + 1 : pick));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<ItemId> weighted_sample_without_replacement(std::span<const double> weights, std::size_t k,
                                                        Rng& rng, std::optional<ItemId> exclude) {
  const std::size_t n = weights.size();
  struct Keyed {
    double key;
    ItemId index;
  };
  std::vector<Keyed> positive;
  std::vector<ItemId> zero;
  for (std::size_t i = 0; i < n; ++i) {
    if (exclude && i == *exclude) continue;
    const double w = weights[i];
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("sampling weights must be finite and >= 0");
    if (w > 0.0) {
      // log(u) / w: the largest keys form a weighted sample without replacement.
      positive.push_back({std::log(rng.uniform_open()) / w, static_cast<ItemId>(i)});
    } else {
      zero.push_back(static_cast<ItemId>(i));
    }
  }
  if (k > positive.size() + zero.size()) {
    throw std::invalid_argument(fmt::format("cannot draw {} of {} items", k, positive.size() + zero.size()));
  }
  std::vector<ItemId> out;
  out.reserve(k);
  const std::size_t from_positive = std::min(k, positive.size());
  auto by_key = [](const Keyed& a, const Keyed& b) {
    if (a.key != b.key) return a.key > b.key;
    return a.index < b.index;
  };
  std::nth_element(positive.begin(), positive.begin() + static_cast<std::ptrdiff_t>(from_positive),
                   positive.end(), by_key);
  for (std::size_t i = 0; i < from_positive; ++i) out.push_back(positive[i].index);
  if (k > from_positive) {
    for (ItemId pick : uniform_sample_without_replacement(zero.size(), k - from_positive, rng)) {
      out.push_back(zero[pick]);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<ItemId> sample_negatives(const SamplerSpec& spec, ItemId target, std::size_t catalog,
                                     const SamplingResources& resources, Rng& rng) {
  const std::size_t s = spec.resolve_count(catalog);
  const std::optional<ItemId> exclude =
      target < catalog ? std::optional<ItemId>(target) : std::nullopt;
  auto support_of = [&](std::size_t i) { return i < resources.support.size() ? resources.support[i] : 0.0; };
  switch (spec.kind) {
    case SamplerKind::kNone:
      return {};
    case SamplerKind::kUniform:
      return uniform_sample_without_replacement(catalog, s, rng, exclude);
    case SamplerKind::kPopularity: {
      std::vector<double> w(catalog);
      for (std::size_t i = 0; i < catalog; ++i) w[i] = support_of(i);
      return weighted_sample_without_replacement(w, s, rng, exclude);
    }
    case SamplerKind::kInversePopularity: {
      // Items unseen in training are weighted as if seen once.
      std::vector<double> w(catalog);
      for (std::size_t i = 0; i < catalog; ++i) w[i] = 1.0 / std::max(support_of(i), 1.0);
      return weighted_sample_without_replacement(w, s, rng, exclude);
    }
    case SamplerKind::kTopPopular:
      return top_k_by(catalog, target, s,
                      [&](ItemId a, ItemId b) { return support_of(a) > support_of(b); });
    case SamplerKind::kSimilarEmbedding:
    case SamplerKind::kLeastSimilarEmbedding:
    case SamplerKind::kCloseEmbedding:
    case SamplerKind::kFarthestEmbedding: {
      const auto& emb = require_embeddings(resources, catalog);
      if (!exclude) throw std::invalid_argument("embedding samplers need a target item");
      const auto anchor = emb.row(target);
      std::vector<double> key(catalog);
      const bool by_cosine =
          spec.kind == SamplerKind::kSimilarEmbedding || spec.kind == SamplerKind::kLeastSimilarEmbedding;
      for (std::size_t i = 0; i < catalog; ++i) {
        const auto r = emb.row(static_cast<ItemId>(i));
        key[i] = by_cosine ? cosine_similarity(anchor, r) : squared_distance(anchor, r);
      }
      const bool want_high =
          spec.kind == SamplerKind::kSimilarEmbedding || spec.kind == SamplerKind::kFarthestEmbedding;
      if (want_high) return top_k_by(catalog, target, s, [&](ItemId a, ItemId b) { return key[a] > key[b]; });
      return top_k_by(catalog, target, s, [&](ItemId a, ItemId b) { return key[a] < key[b]; });
    }
  }
  return {};
}

}  // namespace recaudit
