#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "recaudit/dataset.hpp"

namespace recaudit {

struct EmbeddingMatrix {
  std::size_t rows = 0;
  std::size_t dim = 0;
  std::vector<double> values;  // row-major rows x dim
  std::string provenance;      // "loaded" | "derived"

  std::span<const double> row(ItemId i) const { return {values.data() + i * dim, dim}; }
};

double cosine_similarity(std::span<const double> a, std::span<const double> b);
double squared_distance(std::span<const double> a, std::span<const double> b);

// L2-normalized whole-sequence co-occurrence rows projected to `dim` columns
// with a seeded Gaussian matrix. Items with no co-occurrence get zero rows.
EmbeddingMatrix derive_embeddings(const Dataset& train, std::size_t dim, std::uint64_t seed);

// "item_id\tv1\t...\tvd" per line; every catalog item must be present.
EmbeddingMatrix load_embeddings(std::istream& in, const ItemIndex& items);
EmbeddingMatrix load_embeddings_file(const std::string& path, const ItemIndex& items);
void dump_embeddings(const EmbeddingMatrix& m, const ItemIndex& items, std::ostream& out);

}  // namespace recaudit
