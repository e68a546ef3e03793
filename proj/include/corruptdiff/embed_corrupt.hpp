#pragma once

#include <span>
#include <vector>

#include "corruptdiff/corruption_config.hpp"
#include "corruptdiff/embedding.hpp"
#include "corruptdiff/rng.hpp"

namespace corruptdiff {

/// Output of one corruption operator application. corrupted is always
/// original + perturbation, entrywise. Operator-specific draws are kept so
/// callers can audit them: xi/singular_values for the spectral operator,
/// attention weights for the multi-scale one.
struct CorruptionResult {
  Embedding corrupted;
  Embedding perturbation;
  std::vector<double> xi;
  std::vector<double> singular_values;
  std::vector<double> attention;
};

/// Batch-centered noise: perturbation = rho * |z - zbar|_F * U where U has
/// i.i.d. Uniform(-1,1) entries. Degenerate z == zbar gives exactly zero.
CorruptionResult bcni(const Embedding& z, const EmbeddingBatch& batch, double rho,
                      RngStream& rng);

/// Spectrum-aware noise: with (U, s, V) = svd(z) and xi_j ~ N(0, e^{-j/D})
/// for j = 1..min(L,D) (1-indexed), perturbation = rho * U diag(xi .* sqrt(s)) V^T.
CorruptionResult sacn(const Embedding& z, double rho, RngStream& rng);

/// Isotropic Gaussian: entries i.i.d. N(0, rho^2 / D).
CorruptionResult gn(const Embedding& z, double rho, RngStream& rng);

/// Bounded uniform: entries i.i.d. Uniform(-rho/sqrt(D), rho/sqrt(D)).
CorruptionResult un(const Embedding& z, double rho, RngStream& rng);

/// Temporal noise: g = (z_t - z_prev) / (|z_t - z_prev|_F + eps_stab),
/// perturbation = rho * (g .* eta) with eta i.i.d. standard normal.
CorruptionResult tani(const Embedding& z_t, const Embedding& z_prev, double rho,
                      double eps_stab, RngStream& rng);

/// Multi-scale spectral noise: per scale s_k, p_k = sacn(z * s_k, rho) with a
/// fresh spectral draw; attention = softmax over |p_k|_F^2; output is
/// sum_k attention_k * p_k plus lambda * gn(z, rho).
CorruptionResult hscan(const Embedding& z, double rho, std::span<const double> scales,
                       double lambda, RngStream& rng);

/// Context needed by operators that look beyond the lone embedding.
struct CorruptionContext {
  const EmbeddingBatch* batch = nullptr;  // required for bcni
  const Embedding* prev = nullptr;        // required for tani
};

/// Dispatches on config.kind; throws if the required context is missing.
CorruptionResult corrupt(const Embedding& z, const CorruptionContext& ctx,
                         const CorruptionConfig& config, RngStream& rng);

}  // namespace corruptdiff
