#include "recaudit/recommenders.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fmt/core.h>

namespace recaudit {

namespace {

constexpr std::uint64_t pair_key(ItemId a, ItemId b) {
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

void require_nonempty(const Dataset& train) {
  if (train.event_count() == 0) throw DataError("cannot fit a model on an empty training set");
}

void require_size(std::span<double> out, std::size_t n) {
  if (out.size() != n) {
    throw std::invalid_argument(fmt::format("score buffer has {} slots, catalog has {}", out.size(), n));
  }
}

constexpr char kBinaryMagic[8] = {'R', 'A', 'S', 'C', 'O', 'R', 'E', '1'};

template <typename T>
void write_le(std::ostream& out, T value) {
  static_assert(std::endian::native == std::endian::little, "binary score files assume little-endian");
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw DataError("truncated binary score file");
  return value;
}

}  // namespace

std::vector<double> RecommenderModel::score_all(std::span<const ItemId> prefix) const {
  std::vector<double> out(catalog_size());
  score_all(ScoreQuery{prefix, 0}, out);
  return out;
}

SparseCounts::SparseCounts(std::size_t rows, const std::unordered_map<std::uint64_t, double>& pairs) {
  std::vector<std::pair<std::uint64_t, double>> sorted(pairs.begin(), pairs.end());
  std::sort(sorted.begin(), sorted.end());
  offsets_.assign(rows + 1, 0);
  cols_.reserve(sorted.size());
  vals_.reserve(sorted.size());
  for (const auto& [key, value] : sorted) {
    const auto row = static_cast<std::size_t>(key >> 32);
    ++offsets_[row + 1];
    cols_.push_back(static_cast<ItemId>(key & 0xffffffffu));
    vals_.push_back(value);
  }
  for (std::size_t r = 0; r < rows; ++r) offsets_[r + 1] += offsets_[r];
}

std::span<const ItemId> SparseCounts::columns(ItemId row) const {
  if (row + 1 >= offsets_.size()) return {};
  return {cols_.data() + offsets_[row], offsets_[row + 1] - offsets_[row]};
}

std::span<const double> SparseCounts::values(ItemId row) const {
  if (row + 1 >= offsets_.size()) return {};
  return {vals_.data() + offsets_[row], offsets_[row + 1] - offsets_[row]};
}

double SparseCounts::at(ItemId row, ItemId col) const {
  const auto cols = columns(row);
  auto it = std::lower_bound(cols.begin(), cols.end(), col);
  if (it == cols.end() || *it != col) return 0.0;
  return values(row)[static_cast<std::size_t>(it - cols.begin())];
}

// Popularity

PopularityModel::PopularityModel(const Dataset& train) {
  require_nonempty(train);
  scores_.assign(train.catalog_size(), 0.0);
  for (const auto& s : train.sequences) {
    for (const auto& e : s.events) scores_[e.item] += 1.0;
  }
}

void PopularityModel::score_all(const ScoreQuery&, std::span<double> out) const {
  require_size(out, scores_.size());
  std::copy(scores_.begin(), scores_.end(), out.begin());
}

// Markov

MarkovModel::MarkovModel(const Dataset& train, double smoothing)
    : popularity_(train), smoothing_(smoothing) {
  if (!(smoothing >= 0.0) || !std::isfinite(smoothing)) {
    throw std::invalid_argument("markov smoothing must be finite and >= 0");
  }
  std::unordered_map<std::uint64_t, double> pairs;
  for (const auto& s : train.sequences) {
    for (std::size_t p = 1; p < s.size(); ++p) pairs[pair_key(s.events[p - 1].item, s.events[p].item)] += 1.0;
  }
  counts_ = SparseCounts(train.catalog_size(), pairs);
}

void MarkovModel::score_all(const ScoreQuery& query, std::span<double> out) const {
  require_size(out, catalog_size());
  if (query.prefix.empty() || counts_.columns(query.prefix.back()).empty()) {
    popularity_.score_all(query, out);
    return;
  }
  const ItemId last = query.prefix.back();
  std::fill(out.begin(), out.end(), smoothing_);
  const auto cols = counts_.columns(last);
  const auto vals = counts_.values(last);
  for (std::size_t k = 0; k < cols.size(); ++k) out[cols[k]] += vals[k];
}

// Co-occurrence

CooccurrenceModel::CooccurrenceModel(const Dataset& train, std::size_t window, bool recency_decay)
    : popularity_(train), recency_decay_(recency_decay) {
  std::unordered_map<std::uint64_t, double> pairs;
  for (const auto& s : train.sequences) {
    const std::size_t n = s.size();
    for (std::size_t p = 0; p < n; ++p) {
      const std::size_t end = window == 0 ? n : std::min(n, p + window + 1);
      for (std::size_t q = p + 1; q < end; ++q) {
        const ItemId a = s.events[p].item;
        const ItemId b = s.events[q].item;
        if (a == b) continue;
        pairs[pair_key(a, b)] += 1.0;
        pairs[pair_key(b, a)] += 1.0;
      }
    }
  }
  counts_ = SparseCounts(train.catalog_size(), pairs);
}

void CooccurrenceModel::score_all(const ScoreQuery& query, std::span<double> out) const {
  require_size(out, catalog_size());
  std::fill(out.begin(), out.end(), 0.0);
  bool any = false;
  const std::size_t n = query.prefix.size();
  for (std::size_t k = 0; k < n; ++k) {
    const ItemId item = query.prefix[k];
    if (item >= counts_.rows()) continue;
    const auto cols = counts_.columns(item);
    if (cols.empty()) continue;
    any = true;
    const double weight = recency_decay_ ? 1.0 / static_cast<double>(n - k) : 1.0;
    const auto vals = counts_.values(item);
    for (std::size_t c = 0; c < cols.size(); ++c) out[cols[c]] += weight * vals[c];
  }
  if (!any) popularity_.score_all(query, out);
}

// Session kNN

SessionKnnModel::SessionKnnModel(const Dataset& train, SessionKnnConfig cfg)
    : popularity_(train), cfg_(cfg) {
  if (cfg_.k < 1) throw std::invalid_argument("session_knn.k must be >= 1");
  if (cfg_.sample_size < 1) throw std::invalid_argument("session_knn.sample_size must be >= 1");
  const std::size_t n = train.sequences.size();
  sessions_.reserve(n);
  for (const auto& s : train.sequences) {
    std::vector<ItemId> items;
    items.reserve(s.size());
    for (const auto& e : s.events) items.push_back(e.item);
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end()), items.end());
    sessions_.push_back(std::move(items));
  }
  std::vector<std::uint32_t> order(n);
  for (std::uint32_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    const auto ta = train.sequences[a].end_time();
    const auto tb = train.sequences[b].end_time();
    if (ta != tb) return ta > tb;
    return a > b;
  });
  recency_rank_.assign(n, 0);
  for (std::size_t r = 0; r < n; ++r) recency_rank_[order[r]] = r;
  postings_.assign(train.catalog_size(), {});
  for (std::uint32_t s : order) {
    for (ItemId item : sessions_[s]) postings_[item].push_back(s);
  }
}

void SessionKnnModel::score_all(const ScoreQuery& query, std::span<double> out) const {
  require_size(out, catalog_size());
  std::vector<ItemId> prefix_set(query.prefix.begin(), query.prefix.end());
  std::sort(prefix_set.begin(), prefix_set.end());
  prefix_set.erase(std::unique(prefix_set.begin(), prefix_set.end()), prefix_set.end());

  // Most recent `sample_size` sessions containing any prefix item.
  std::vector<std::uint32_t> candidates;
  for (ItemId item : prefix_set) {
    if (item >= postings_.size()) continue;
    const auto& list = postings_[item];
    const std::size_t take = std::min(list.size(), cfg_.sample_size);
    candidates.insert(candidates.end(), list.begin(), list.begin() + static_cast<std::ptrdiff_t>(take));
  }
  if (candidates.empty()) {
    popularity_.score_all(query, out);
    return;
  }
  std::sort(candidates.begin(), candidates.end(),
            [&](std::uint32_t a, std::uint32_t b) { return recency_rank_[a] < recency_rank_[b]; });
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  if (candidates.size() > cfg_.sample_size) candidates.resize(cfg_.sample_size);

  struct Neighbor {
    std::uint32_t session;
    double similarity;
  };
  std::vector<Neighbor> neighbors;
  neighbors.reserve(candidates.size());
  const double prefix_norm = static_cast<double>(prefix_set.size());
  for (std::uint32_t s : candidates) {
    const auto& items = sessions_[s];
    std::size_t shared = 0;
    auto a = prefix_set.begin();
    auto b = items.begin();
    while (a != prefix_set.end() && b != items.end()) {
      if (*a < *b) {
        ++a;
      } else if (*b < *a) {
        ++b;
      } else {
        ++shared;
        ++a;
        ++b;
      }
    }
    if (shared == 0) continue;
    neighbors.push_back({s, static_cast<double>(shared) / std::sqrt(prefix_norm * static_cast<double>(items.size()))});
  }
  const std::size_t k = std::min(cfg_.k, neighbors.size());
  std::partial_sort(neighbors.begin(), neighbors.begin() + static_cast<std::ptrdiff_t>(k), neighbors.end(),
                    [&](const Neighbor& x, const Neighbor& y) {
                      if (x.similarity != y.similarity) return x.similarity > y.similarity;
                      return recency_rank_[x.session] < recency_rank_[y.session];
                    });

  std::fill(out.begin(), out.end(), 0.0);
  const std::size_t len = query.prefix.size();
  for (std::size_t n = 0; n < k; ++n) {
    const auto& items = sessions_[neighbors[n].session];
    double weight = 1.0;
    if (cfg_.decay == KnnDecay::kLinear) {
      // Position (0 = last) of the most recent prefix item this neighbor contains.
      std::size_t back = len;
      for (std::size_t p = 0; p < len; ++p) {
        const ItemId item = query.prefix[len - 1 - p];
        if (std::binary_search(items.begin(), items.end(), item)) {
          back = p;
          break;
        }
      }
      weight = static_cast<double>(len - back) / static_cast<double>(len);
    }
    const double contribution = neighbors[n].similarity * weight;
    for (ItemId item : items) out[item] += contribution;
  }
}

// External scores

ExternalScoresModel::ExternalScoresModel(std::size_t catalog,
                                         std::unordered_map<std::uint64_t, std::vector<double>> rows)
    : catalog_(catalog), rows_(std::move(rows)) {
  for (const auto& [id, row] : rows_) {
    if (row.size() != catalog_) {
      throw DataError(fmt::format("external scores for case {} have {} columns, catalog has {}", id,
                                  row.size(), catalog_));
    }
    for (double v : row) {
      if (!std::isfinite(v)) throw DataError(fmt::format("non-finite external score for case {}", id));
    }
  }
}

void ExternalScoresModel::score_all(const ScoreQuery& query, std::span<double> out) const {
  require_size(out, catalog_);
  auto it = rows_.find(query.case_id);
  if (it == rows_.end()) throw DataError(fmt::format("no external scores for test case {}", query.case_id));
  std::copy(it->second.begin(), it->second.end(), out.begin());
}

ExternalScoresModel ExternalScoresModel::read_tsv(std::istream& in, std::size_t catalog) {
  std::unordered_map<std::uint64_t, std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string token;
    if (!std::getline(fields, token, '\t')) continue;
    std::uint64_t id = 0;
    try {
      id = std::stoull(token);
    } catch (const std::exception&) {
      throw DataError(fmt::format("scores line {}: bad case id '{}'", line_no, token));
    }
    std::vector<double> row;
    row.reserve(catalog);
    while (std::getline(fields, token, '\t')) {
      try {
        row.push_back(std::stod(token));
      } catch (const std::exception&) {
        throw DataError(fmt::format("scores line {}: bad score '{}'", line_no, token));
      }
    }
    if (!rows.emplace(id, std::move(row)).second) {
      throw DataError(fmt::format("scores line {}: duplicate case id {}", line_no, id));
    }
  }
  return ExternalScoresModel(catalog, std::move(rows));
}

ExternalScoresModel ExternalScoresModel::read_binary(std::istream& in, std::size_t catalog) {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kBinaryMagic, sizeof(magic)) != 0) throw DataError("not a binary score file");
  const auto n_rows = read_le<std::uint64_t>(in);
  const auto n_cols = read_le<std::uint64_t>(in);
  if (n_cols != catalog) {
    throw DataError(fmt::format("binary scores have {} columns, catalog has {}", n_cols, catalog));
  }
  std::unordered_map<std::uint64_t, std::vector<double>> rows;
  for (std::uint64_t r = 0; r < n_rows; ++r) {
    const auto id = read_le<std::uint64_t>(in);
    std::vector<double> row(catalog);
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(catalog * sizeof(double)));
    if (!in) throw DataError("truncated binary score file");
    if (!rows.emplace(id, std::move(row)).second) throw DataError(fmt::format("duplicate case id {}", id));
  }
  return ExternalScoresModel(catalog, std::move(rows));
}

ExternalScoresModel ExternalScoresModel::read_file(const std::string& path, std::size_t catalog) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open '{}'", path));
  char magic[8] = {};
  in.read(magic, sizeof(magic));
  const bool binary = in.gcount() == 8 && std::memcmp(magic, kBinaryMagic, sizeof(magic)) == 0;
  in.clear();
  in.seekg(0);
  return binary ? read_binary(in, catalog) : read_tsv(in, catalog);
}

void write_scores_tsv(std::ostream& out, std::uint64_t case_id, std::span<const double> scores) {
  out << case_id;
  for (double v : scores) out << '\t' << fmt::format("{}", v);
  out << '\n';
}

void write_scores_binary_header(std::ostream& out, std::uint64_t rows, std::uint64_t cols) {
  out.write(kBinaryMagic, sizeof(kBinaryMagic));
  write_le(out, rows);
  write_le(out, cols);
}

void write_scores_binary_row(std::ostream& out, std::uint64_t case_id, std::span<const double> scores) {
  write_le(out, case_id);
  out.write(reinterpret_cast<const char*>(scores.data()), static_cast<std::streamsize>(scores.size_bytes()));
}

ModelPtr fit_popularity(const Dataset& train) { return std::make_shared<PopularityModel>(train); }

ModelPtr fit_markov(const Dataset& train, double smoothing) {
  return std::make_shared<MarkovModel>(train, smoothing);
}

ModelPtr fit_cooccurrence(const Dataset& train, std::size_t window, bool recency_decay) {
  return std::make_shared<CooccurrenceModel>(train, window, recency_decay);
}

ModelPtr fit_session_knn(const Dataset& train, const SessionKnnConfig& cfg) {
  return std::make_shared<SessionKnnModel>(train, cfg);
}

}  // namespace recaudit
