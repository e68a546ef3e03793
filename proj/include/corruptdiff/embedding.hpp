#pragma once

#include <string>
#include <vector>

#include "corruptdiff/matrix.hpp"

namespace corruptdiff {

/// A conditioning embedding is an L x D matrix: rows are tokens, columns are
/// embedding dimensions. L = 1 encodes a plain vector embedding.
using Embedding = Matrix;

/// Throws unless the embedding has L >= 1, D >= 1, and finite entries.
void validate_embedding(const Embedding& z);

/// A batch of same-shape embeddings with its entrywise mean cached eagerly.
class EmbeddingBatch {
 public:
  explicit EmbeddingBatch(std::vector<Embedding> items);

  std::size_t size() const { return items_.size(); }
  const Embedding& item(std::size_t i) const { return items_.at(i); }
  const std::vector<Embedding>& items() const { return items_; }
  const Embedding& mean() const { return mean_; }

 private:
  std::vector<Embedding> items_;
  Embedding mean_;
};

/// Entrywise arithmetic mean over the batch (same value the batch caches).
Embedding batch_mean(const EmbeddingBatch& batch);

// "EMB1" binary container: magic bytes "EMB1", then B, L, D as little-endian
// uint64, then B*L*D little-endian doubles (row-major per embedding).
void write_emb1(const std::string& path, const std::vector<Embedding>& items);
std::vector<Embedding> read_emb1(const std::string& path);

/// CSV import: one vector embedding (L = 1) per row, comma-separated.
std::vector<Embedding> read_embedding_csv(const std::string& path);

}  // namespace corruptdiff
