#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "corruptdiff/rng.hpp"

namespace corruptdiff {

/// A prompt is its whitespace-split word list; punctuation stays attached to
/// its word. May be empty.
struct Prompt {
  std::vector<std::string> tokens;

  static Prompt tokenize(std::string_view line);
  std::string join() const;
};

enum class TokenOp { kSwap, kReplace, kAdd, kRemove, kPerturb };

TokenOp token_op_from_string(const std::string& name);
std::string to_string(TokenOp op);

/// Number of edit operations at noise ratio eta on an n-token prompt:
/// 0 when eta == 0 or n == 0, else max(1, round(eta * n)).
std::size_t tlc_count(std::size_t n_tokens, double eta);

/// k transpositions of uniformly sampled distinct index pairs. No-op on
/// prompts shorter than two tokens; the token multiset never changes.
Prompt tlc_swap(const Prompt& p, double eta, RngStream& rng);

/// Replaces k distinct positions with gibberish five-letter words.
Prompt tlc_replace(const Prompt& p, double eta, RngStream& rng);

/// Inserts k gibberish words at uniformly chosen gaps; the original token
/// sequence survives as a subsequence.
Prompt tlc_add(const Prompt& p, double eta, RngStream& rng);

/// Deletes k uniformly chosen distinct positions (k capped at n).
Prompt tlc_remove(const Prompt& p, double eta, RngStream& rng);

/// Typo noise: k distinct tokens each get min(2, len) character positions
/// resampled to a different lowercase letter, so every selected token changes
/// and ends within edit distance 2 of the original.
Prompt tlc_perturb(const Prompt& p, double eta, RngStream& rng);

Prompt corrupt_prompt(const Prompt& p, TokenOp op, double eta, RngStream& rng);

}  // namespace corruptdiff
