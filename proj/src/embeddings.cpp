#include "recaudit/embeddings.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/core.h>

#include "recaudit/random.hpp"
#include "recaudit/recommenders.hpp"

namespace recaudit {

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a[i] - b[i];
    d += x * x;
  }
  return d;
}

EmbeddingMatrix derive_embeddings(const Dataset& train, std::size_t dim, std::uint64_t seed) {
  const std::size_t n = train.catalog_size();
  if (dim < 1) throw std::invalid_argument("embedding dimension must be >= 1");
  if (dim > n) throw std::invalid_argument(fmt::format("embedding dimension {} exceeds catalog size {}", dim, n));
  const CooccurrenceModel cooc(train, 0, false);
  const auto& counts = cooc.counts();

  // Projection row j is generated from its own stream so it never has to be stored.
  std::vector<double> projection(n * dim);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  for (std::size_t j = 0; j < n; ++j) {
    Rng rng(mix_seed(seed, j));
    for (std::size_t c = 0; c < dim; ++c) projection[j * dim + c] = rng.normal() * scale;
  }

  EmbeddingMatrix m;
  m.rows = n;
  m.dim = dim;
  m.values.assign(n * dim, 0.0);
  m.provenance = "derived";
  for (std::size_t i = 0; i < n; ++i) {
    const auto cols = counts.columns(static_cast<ItemId>(i));
    const auto vals = counts.values(static_cast<ItemId>(i));
    double norm = 0.0;
    for (double v : vals) norm += v * v;
    if (norm == 0.0) continue;
    norm = std::sqrt(norm);
    double* out = m.values.data() + i * dim;
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const double w = vals[k] / norm;
      const double* p = projection.data() + static_cast<std::size_t>(cols[k]) * dim;
      for (std::size_t c = 0; c < dim; ++c) out[c] += w * p[c];
    }
  }
  return m;
}

EmbeddingMatrix load_embeddings(std::istream& in, const ItemIndex& items) {
  EmbeddingMatrix m;
  m.rows = items.size();
  m.provenance = "loaded";
  std::vector<bool> seen(items.size(), false);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string id;
    std::getline(fields, id, '\t');
    std::vector<double> row;
    std::string token;
    while (std::getline(fields, token, '\t')) {
      char* end = nullptr;
      const double v = std::strtod(token.c_str(), &end);
      if (end == token.c_str() || *end != '\0' || !std::isfinite(v)) {
        throw DataError(fmt::format("embeddings line {}: bad value '{}'", line_no, token));
      }
      row.push_back(v);
    }
    if (row.empty()) throw DataError(fmt::format("embeddings line {}: no values", line_no));
    if (m.dim == 0) {
      m.dim = row.size();
      m.values.assign(m.rows * m.dim, 0.0);
    } else if (row.size() != m.dim) {
      throw DataError(fmt::format("embeddings line {}: {} values, expected {}", line_no, row.size(), m.dim));
    }
    const auto index = items.find(id);
    if (!index) continue;  // not part of this catalog
    if (seen[*index]) throw DataError(fmt::format("embeddings line {}: duplicate item '{}'", line_no, id));
    seen[*index] = true;
    std::copy(row.begin(), row.end(), m.values.begin() + static_cast<std::ptrdiff_t>(*index * m.dim));
  }
  std::size_t missing = 0;
  std::string examples;
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (seen[i]) continue;
    if (missing++ < 5) examples += fmt::format(" '{}'", items.id(static_cast<ItemId>(i)));
  }
  if (missing > 0) throw DataError(fmt::format("embeddings missing {} catalog items:{}", missing, examples));
  return m;
}

EmbeddingMatrix load_embeddings_file(const std::string& path, const ItemIndex& items) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open '{}'", path));
  return load_embeddings(in, items);
}

void dump_embeddings(const EmbeddingMatrix& m, const ItemIndex& items, std::ostream& out) {
  for (std::size_t i = 0; i < m.rows; ++i) {
    out << items.id(static_cast<ItemId>(i));
    for (double v : m.row(static_cast<ItemId>(i))) out << '\t' << fmt::format("{}", v);
    out << '\n';
  }
}

}  // namespace recaudit
