#include "corruptdiff/corruption_config.hpp"

#include <stdexcept>

namespace corruptdiff {

CorruptionKind corruption_kind_from_string(const std::string& name) {
  if (name == "bcni") return CorruptionKind::kBcni;
  if (name == "sacn") return CorruptionKind::kSacn;
  if (name == "gn") return CorruptionKind::kGn;
  if (name == "un") return CorruptionKind::kUn;
  if (name == "tani") return CorruptionKind::kTani;
  if (name == "hscan") return CorruptionKind::kHscan;
  throw std::invalid_argument("unknown corruption kind: " + name);
}

std::string to_string(CorruptionKind kind) {
  switch (kind) {
    case CorruptionKind::kBcni: return "bcni";
    case CorruptionKind::kSacn: return "sacn";
    case CorruptionKind::kGn: return "gn";
    case CorruptionKind::kUn: return "un";
    case CorruptionKind::kTani: return "tani";
    case CorruptionKind::kHscan: return "hscan";
  }
  return "unknown";
}

void CorruptionConfig::validate() const {
  if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("rho must lie in [0,1]");
  if (hscan_lambda < 0.0) throw std::invalid_argument("hscan_lambda must be >= 0");
  if (hscan_scales.empty()) throw std::invalid_argument("hscan_scales must be nonempty");
  for (double s : hscan_scales) {
    if (!(s > 0.0 && s <= 1.0)) throw std::invalid_argument("hscan scales must lie in (0,1]");
  }
  if (tani_eps_stab < 0.0) throw std::invalid_argument("tani_eps_stab must be >= 0");
}

}  // namespace corruptdiff
