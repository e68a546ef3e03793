// Test-only oracles, independent of the library code paths they check.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "corruptdiff/matrix.hpp"

namespace oracles {

// Determinant by cofactor expansion in long double; exponential cost, fine
// for n <= 6.
inline long double cofactor_det(const corruptdiff::Matrix& a) {
  const std::size_t n = a.rows();
  if (n == 1) return static_cast<long double>(a(0, 0));
  long double det = 0.0L;
  for (std::size_t j = 0; j < n; ++j) {
    corruptdiff::Matrix minor(n - 1, n - 1);
    for (std::size_t r = 1; r < n; ++r) {
      std::size_t cc = 0;
      for (std::size_t c = 0; c < n; ++c) {
        if (c == j) continue;
        minor(r - 1, cc++) = a(r, c);
      }
    }
    const long double sign = (j % 2 == 0) ? 1.0L : -1.0L;
    det += sign * static_cast<long double>(a(0, j)) * cofactor_det(minor);
  }
  return det;
}

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

inline Moments moments(std::span<const double> xs) {
  Moments m;
  for (double x : xs) m.mean += x;
  m.mean /= static_cast<double>(xs.size());
  for (double x : xs) m.variance += (x - m.mean) * (x - m.mean);
  m.variance /= static_cast<double>(xs.size() > 1 ? xs.size() - 1 : 1);
  return m;
}

inline bool same_multiset(std::vector<std::string> a, std::vector<std::string> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return a == b;
}

inline bool is_subsequence(const std::vector<std::string>& needle,
                           const std::vector<std::string>& haystack) {
  std::size_t i = 0;
  for (const auto& tok : haystack) {
    if (i < needle.size() && needle[i] == tok) ++i;
  }
  return i == needle.size();
}

inline std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace oracles
