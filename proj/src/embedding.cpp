#include "corruptdiff/embedding.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace corruptdiff {

void validate_embedding(const Embedding& z) {
  if (z.rows() == 0 || z.cols() == 0) throw std::invalid_argument("embedding must be L>=1, D>=1");
  if (!z.all_finite()) throw std::invalid_argument("embedding has non-finite entries");
}

EmbeddingBatch::EmbeddingBatch(std::vector<Embedding> items) : items_(std::move(items)) {
  if (items_.empty()) throw std::invalid_argument("embedding batch must be nonempty");
  for (const auto& z : items_) {
    validate_embedding(z);
    if (!z.same_shape(items_.front())) {
      throw std::invalid_argument("embedding batch items must share one shape");
    }
  }
  mean_ = Embedding(items_.front().rows(), items_.front().cols());
  for (const auto& z : items_) mean_ += z;
  mean_ *= 1.0 / static_cast<double>(items_.size());
}

Embedding batch_mean(const EmbeddingBatch& batch) { return batch.mean(); }

namespace {

void put_u64le(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64le(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw std::runtime_error("emb1: truncated file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

void put_f64le(std::ostream& os, double d) {
  std::uint64_t v = std::bit_cast<std::uint64_t>(d);
  put_u64le(os, v);
}

double get_f64le(std::istream& is) { return std::bit_cast<double>(get_u64le(is)); }

}  // namespace

void write_emb1(const std::string& path, const std::vector<Embedding>& items) {
  if (items.empty()) throw std::invalid_argument("emb1: nothing to write");
  const std::size_t l = items.front().rows();
  const std::size_t d = items.front().cols();
  for (const auto& z : items) {
    if (z.rows() != l || z.cols() != d) throw std::invalid_argument("emb1: mixed shapes");
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("emb1: cannot open for writing: " + path);
  os.write("EMB1", 4);
  put_u64le(os, items.size());
  put_u64le(os, l);
  put_u64le(os, d);
  for (const auto& z : items)
    for (double v : z.storage()) put_f64le(os, v);
  if (!os) throw std::runtime_error("emb1: write failed: " + path);
}

std::vector<Embedding> read_emb1(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("emb1: cannot open: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "EMB1", 4) != 0) throw std::runtime_error("emb1: bad magic");
  const std::uint64_t b = get_u64le(is);
  const std::uint64_t l = get_u64le(is);
  const std::uint64_t d = get_u64le(is);
  if (b == 0 || l == 0 || d == 0) throw std::runtime_error("emb1: zero dimension in header");
  std::vector<Embedding> items;
  items.reserve(b);
  for (std::uint64_t i = 0; i < b; ++i) {
    std::vector<double> data(l * d);
    for (auto& v : data) v = get_f64le(is);
    items.emplace_back(l, d, std::move(data));
    validate_embedding(items.back());
  }
  return items;
}

std::vector<Embedding> read_embedding_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("csv: cannot open: " + path);
  std::vector<Embedding> items;
  std::string line;
  std::size_t width = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (row.empty()) continue;
    if (width == 0) width = row.size();
    if (row.size() != width) throw std::runtime_error("csv: ragged rows");
    items.emplace_back(1, width, std::move(row));
    validate_embedding(items.back());
  }
  if (items.empty()) throw std::runtime_error("csv: no embeddings found");
  return items;
}

}  // namespace corruptdiff
