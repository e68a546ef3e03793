#include "corruptdiff/token_corrupt.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace corruptdiff {

namespace {

constexpr std::size_t kGibberishLength = 5;

std::string gibberish_word(RngStream& rng) {
  std::string w(kGibberishLength, 'a');
  for (char& c : w) {
    c = static_cast<char>('a' + static_cast<int>(rng.next_u64() % 26));
  }
  return w;
}

char different_lowercase(char old_c, RngStream& rng) {
  // Uniform over the 25 lowercase letters other than old_c (any letter when
  // the original is not lowercase).
  if (old_c < 'a' || old_c > 'z') {
    return static_cast<char>('a' + static_cast<int>(rng.next_u64() % 26));
  }
  const int shift = 1 + static_cast<int>(rng.next_u64() % 25);
  return static_cast<char>('a' + ((old_c - 'a') + shift) % 26);
}

// k distinct indices sampled uniformly from [0, n), via partial Fisher-Yates,
// returned in ascending order.
std::vector<std::size_t> sample_distinct(std::size_t n, std::size_t k, RngStream& rng) {
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.next_u64() % (n - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace

Prompt Prompt::tokenize(std::string_view line) {
  Prompt p;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) p.tokens.emplace_back(line.substr(start, i - start));
  }
  return p;
}

std::string Prompt::join() const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out += ' ';
    out += tokens[i];
  }
  return out;
}

TokenOp token_op_from_string(const std::string& name) {
  if (name == "swap") return TokenOp::kSwap;
  if (name == "replace") return TokenOp::kReplace;
  if (name == "add") return TokenOp::kAdd;
  if (name == "remove") return TokenOp::kRemove;
  if (name == "perturb") return TokenOp::kPerturb;
  throw std::invalid_argument("unknown token op: " + name);
}

std::string to_string(TokenOp op) {
  switch (op) {
    case TokenOp::kSwap: return "swap";
    case TokenOp::kReplace: return "replace";
    case TokenOp::kAdd: return "add";
    case TokenOp::kRemove: return "remove";
    case TokenOp::kPerturb: return "perturb";
  }
  return "unknown";
}

std::size_t tlc_count(std::size_t n_tokens, double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("eta must lie in [0,1]");
  if (eta == 0.0 || n_tokens == 0) return 0;
  const double raw = eta * static_cast<double>(n_tokens);
  const auto rounded = static_cast<std::size_t>(std::llround(raw));
  return rounded < 1 ? 1 : rounded;
}

Prompt tlc_swap(const Prompt& p, double eta, RngStream& rng) {
  Prompt out = p;
  const std::size_t n = out.tokens.size();
  if (n < 2) {
    tlc_count(n, eta);  // still validates eta
    return out;
  }
  const std::size_t k = tlc_count(n, eta);
  for (std::size_t step = 0; step < k; ++step) {
    const std::size_t i = static_cast<std::size_t>(rng.next_u64() % n);
    std::size_t j = static_cast<std::size_t>(rng.next_u64() % (n - 1));
    if (j >= i) ++j;
    std::swap(out.tokens[i], out.tokens[j]);
  }
  return out;
}

Prompt tlc_replace(const Prompt& p, double eta, RngStream& rng) {
  Prompt out = p;
  const std::size_t n = out.tokens.size();
  const std::size_t k = tlc_count(n, eta);
  if (k == 0) return out;
  for (std::size_t pos : sample_distinct(n, std::min(k, n), rng)) {
    out.tokens[pos] = gibberish_word(rng);
  }
  return out;
}

Prompt tlc_add(const Prompt& p, double eta, RngStream& rng) {
  Prompt out = p;
  const std::size_t k = tlc_count(out.tokens.size(), eta);
  for (std::size_t step = 0; step < k; ++step) {
    const std::size_t gap = static_cast<std::size_t>(rng.next_u64() % (out.tokens.size() + 1));
    out.tokens.insert(out.tokens.begin() + static_cast<std::ptrdiff_t>(gap), gibberish_word(rng));
  }
  return out;
}

Prompt tlc_remove(const Prompt& p, double eta, RngStream& rng) {
  Prompt out = p;
  const std::size_t n = out.tokens.size();
  const std::size_t k = std::min(tlc_count(n, eta), n);
  if (k == 0) return out;
  const std::vector<std::size_t> victims = sample_distinct(n, k, rng);
  Prompt kept;
  kept.tokens.reserve(n - k);
  std::size_t vi = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (vi < victims.size() && victims[vi] == i) {
      ++vi;
      continue;
    }
    kept.tokens.push_back(std::move(out.tokens[i]));
  }
  return kept;
}

Prompt tlc_perturb(const Prompt& p, double eta, RngStream& rng) {
  Prompt out = p;
  const std::size_t n = out.tokens.size();
  const std::size_t k = tlc_count(n, eta);
  if (k == 0) return out;
  for (std::size_t pos : sample_distinct(n, std::min(k, n), rng)) {
    std::string& tok = out.tokens[pos];
    if (tok.empty()) continue;
    const std::size_t edits = std::min<std::size_t>(2, tok.size());
    for (std::size_t ci : sample_distinct(tok.size(), edits, rng)) {
      tok[ci] = different_lowercase(tok[ci], rng);
    }
  }
  return out;
}

Prompt corrupt_prompt(const Prompt& p, TokenOp op, double eta, RngStream& rng) {
  switch (op) {
    case TokenOp::kSwap: return tlc_swap(p, eta, rng);
    case TokenOp::kReplace: return tlc_replace(p, eta, rng);
    case TokenOp::kAdd: return tlc_add(p, eta, rng);
    case TokenOp::kRemove: return tlc_remove(p, eta, rng);
    case TokenOp::kPerturb: return tlc_perturb(p, eta, rng);
  }
  throw std::logic_error("corrupt_prompt: unhandled op");
}

}  // namespace corruptdiff
