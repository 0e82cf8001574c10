#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "recaudit/dataset.hpp"

namespace recaudit {

struct ScoreQuery {
  std::span<const ItemId> prefix;
  std::uint64_t case_id = 0;
};

// Scores the full catalog for a sequence prefix. Implementations are immutable
// after fitting and safe to call concurrently.
class RecommenderModel {
 public:
  virtual ~RecommenderModel() = default;
  virtual std::string name() const = 0;
  virtual std::size_t catalog_size() const = 0;
  // Writes exactly catalog_size() finite scores into `out`.
  virtual void score_all(const ScoreQuery& query, std::span<double> out) const = 0;

  std::vector<double> score_all(std::span<const ItemId> prefix) const;
};

using ModelPtr = std::shared_ptr<const RecommenderModel>;

// Sparse row-major count matrix (CSR), rows and columns are item indices.
class SparseCounts {
 public:
  SparseCounts() = default;
  // `pairs` holds (row << 32 | col) keys with their counts.
  SparseCounts(std::size_t rows, const std::unordered_map<std::uint64_t, double>& pairs);

  std::size_t rows() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::span<const ItemId> columns(ItemId row) const;
  std::span<const double> values(ItemId row) const;
  double at(ItemId row, ItemId col) const;
  std::size_t nonzeros() const { return cols_.size(); }

 private:
  std::vector<std::size_t> offsets_;
  std::vector<ItemId> cols_;
  std::vector<double> vals_;
};

class PopularityModel final : public RecommenderModel {
 public:
  explicit PopularityModel(const Dataset& train);
  std::string name() const override { return "popularity"; }
  std::size_t catalog_size() const override { return scores_.size(); }
  using RecommenderModel::score_all;
  void score_all(const ScoreQuery& query, std::span<double> out) const override;
  std::span<const double> scores() const { return scores_; }

 private:
  std::vector<double> scores_;
};

// First-order transition counts: score(j) = count(last -> j) + smoothing.
class MarkovModel final : public RecommenderModel {
 public:
  MarkovModel(const Dataset& train, double smoothing);
  std::string name() const override { return "markov"; }
  std::size_t catalog_size() const override { return popularity_.catalog_size(); }
  using RecommenderModel::score_all;
  void score_all(const ScoreQuery& query, std::span<double> out) const override;
  double transitions(ItemId from, ItemId to) const { return counts_.at(from, to); }

 private:
  PopularityModel popularity_;
  SparseCounts counts_;
  double smoothing_;
};

// Symmetric co-occurrence within `window` positions (0 = whole sequence),
// order ignored.
class CooccurrenceModel final : public RecommenderModel {
 public:
  CooccurrenceModel(const Dataset& train, std::size_t window, bool recency_decay);
  std::string name() const override { return "cooccurrence"; }
  std::size_t catalog_size() const override { return popularity_.catalog_size(); }
  using RecommenderModel::score_all;
  void score_all(const ScoreQuery& query, std::span<double> out) const override;
  double cooccurrence(ItemId a, ItemId b) const { return counts_.at(a, b); }
  const SparseCounts& counts() const { return counts_; }

 private:
  PopularityModel popularity_;
  SparseCounts counts_;
  bool recency_decay_;
};

enum class KnnDecay { kNone, kLinear };

struct SessionKnnConfig {
  std::size_t k = 100;
  std::size_t sample_size = 1000;
  KnnDecay decay = KnnDecay::kLinear;
};

// Session-based kNN: cosine over binary item sets against the most recent
// candidate sessions sharing an item with the prefix.
class SessionKnnModel final : public RecommenderModel {
 public:
  SessionKnnModel(const Dataset& train, SessionKnnConfig cfg);
  std::string name() const override { return "session_knn"; }
  std::size_t catalog_size() const override { return popularity_.catalog_size(); }
  using RecommenderModel::score_all;
  void score_all(const ScoreQuery& query, std::span<double> out) const override;

 private:
  PopularityModel popularity_;
  SessionKnnConfig cfg_;
  std::vector<std::vector<ItemId>> sessions_;  // sorted distinct items
  std::vector<std::size_t> recency_rank_;      // 0 = most recent
  std::vector<std::vector<std::uint32_t>> postings_;  // item -> sessions, most recent first
};

// Precomputed scores keyed by test-case id, for models trained elsewhere.
class ExternalScoresModel final : public RecommenderModel {
 public:
  ExternalScoresModel(std::size_t catalog, std::unordered_map<std::uint64_t, std::vector<double>> rows);
  std::string name() const override { return "external"; }
  std::size_t catalog_size() const override { return catalog_; }
  using RecommenderModel::score_all;
  void score_all(const ScoreQuery& query, std::span<double> out) const override;

  // Dense rows "case_id\ts_0\t...\ts_{n-1}".
  static ExternalScoresModel read_tsv(std::istream& in, std::size_t catalog);
  // Little-endian: "RASCORE1", u64 rows, u64 cols, then rows x (u64 case_id, cols x f64).
  static ExternalScoresModel read_binary(std::istream& in, std::size_t catalog);
  static ExternalScoresModel read_file(const std::string& path, std::size_t catalog);

 private:
  std::size_t catalog_;
  std::unordered_map<std::uint64_t, std::vector<double>> rows_;
};

void write_scores_tsv(std::ostream& out, std::uint64_t case_id, std::span<const double> scores);
void write_scores_binary_header(std::ostream& out, std::uint64_t rows, std::uint64_t cols);
void write_scores_binary_row(std::ostream& out, std::uint64_t case_id, std::span<const double> scores);

ModelPtr fit_popularity(const Dataset& train);
ModelPtr fit_markov(const Dataset& train, double smoothing);
ModelPtr fit_cooccurrence(const Dataset& train, std::size_t window, bool recency_decay = false);
ModelPtr fit_session_knn(const Dataset& train, const SessionKnnConfig& cfg = {});

}  // namespace recaudit
