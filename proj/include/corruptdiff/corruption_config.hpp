#pragma once

#include <array>
#include <string>
#include <vector>

namespace corruptdiff {

enum class CorruptionKind { kBcni, kSacn, kGn, kUn, kTani, kHscan };

CorruptionKind corruption_kind_from_string(const std::string& name);
std::string to_string(CorruptionKind kind);

/// The corruption-strength sweep used throughout: six magnitudes from minimal
/// to moderate.
inline constexpr std::array<double, 6> kRhoGrid = {0.025, 0.05, 0.075, 0.10, 0.15, 0.20};

struct CorruptionConfig {
  CorruptionKind kind = CorruptionKind::kGn;
  double rho = 0.0;
  std::vector<double> hscan_scales = {1.0, 0.5, 0.25};
  double hscan_lambda = 0.1;
  double tani_eps_stab = 1e-8;

  /// rho in [0,1], lambda >= 0, scales nonempty and each in (0,1].
  void validate() const;
};

}  // namespace corruptdiff
