#include "corruptdiff/embed_corrupt.hpp"

#include <cmath>
#include <stdexcept>

#include "corruptdiff/linalg.hpp"

namespace corruptdiff {

namespace {

CorruptionResult finish(const Embedding& z, Embedding perturbation) {
  CorruptionResult out;
  out.corrupted = z;
  out.corrupted += perturbation;
  out.perturbation = std::move(perturbation);
  return out;
}

}  // namespace

CorruptionResult bcni(const Embedding& z, const EmbeddingBatch& batch, double rho,
                      RngStream& rng) {
  validate_embedding(z);
  if (!z.same_shape(batch.mean())) throw std::invalid_argument("bcni: shape mismatch with batch");
  Embedding deviation = z;
  deviation -= batch.mean();
  const double scale = rho * deviation.frobenius_norm();
  Embedding pert(z.rows(), z.cols());
  for (double& v : pert.storage()) v = scale * rng.next_symmetric();
  return finish(z, std::move(pert));
}

CorruptionResult sacn(const Embedding& z, double rho, RngStream& rng) {
  validate_embedding(z);
  const Svd dec = svd(z);
  const std::size_t r = dec.s.size();
  const double d_embed = static_cast<double>(z.cols());
  std::vector<double> xi(r);
  for (std::size_t j = 0; j < r; ++j) {
    // Variance e^{-j/D} with j running 1..r.
    const double std_j = std::exp(-0.5 * static_cast<double>(j + 1) / d_embed);
    xi[j] = std_j * rng.next_gaussian();
  }
  // rho * U diag(xi .* sqrt(s)) V^T
  Embedding pert(z.rows(), z.cols());
  for (std::size_t k = 0; k < r; ++k) {
    const double w = rho * xi[k] * std::sqrt(dec.s[k]);
    if (w == 0.0) continue;
    for (std::size_t i = 0; i < z.rows(); ++i) {
      const double uw = dec.u(i, k) * w;
      for (std::size_t j = 0; j < z.cols(); ++j) pert(i, j) += uw * dec.v(j, k);
    }
  }
  CorruptionResult out = finish(z, std::move(pert));
  out.xi = std::move(xi);
  out.singular_values = dec.s;
  return out;
}

CorruptionResult gn(const Embedding& z, double rho, RngStream& rng) {
  validate_embedding(z);
  const double scale = rho / std::sqrt(static_cast<double>(z.cols()));
  Embedding pert(z.rows(), z.cols());
  for (double& v : pert.storage()) v = scale * rng.next_gaussian();
  return finish(z, std::move(pert));
}

CorruptionResult un(const Embedding& z, double rho, RngStream& rng) {
  validate_embedding(z);
  const double bound = rho / std::sqrt(static_cast<double>(z.cols()));
  Embedding pert(z.rows(), z.cols());
  for (double& v : pert.storage()) v = bound * rng.next_symmetric();
  return finish(z, std::move(pert));
}

CorruptionResult tani(const Embedding& z_t, const Embedding& z_prev, double rho,
                      double eps_stab, RngStream& rng) {
  validate_embedding(z_t);
  if (!z_t.same_shape(z_prev)) throw std::invalid_argument("tani: shape mismatch");
  Embedding direction = z_t;
  direction -= z_prev;
  const double denom = direction.frobenius_norm() + eps_stab;
  if (denom > 0.0) direction *= 1.0 / denom;
  Embedding pert(z_t.rows(), z_t.cols());
  for (std::size_t i = 0; i < pert.size(); ++i) {
    pert.storage()[i] = rho * direction.storage()[i] * rng.next_gaussian();
  }
  return finish(z_t, std::move(pert));
}

CorruptionResult hscan(const Embedding& z, double rho, std::span<const double> scales,
                       double lambda, RngStream& rng) {
  validate_embedding(z);
  if (scales.empty()) throw std::invalid_argument("hscan: scales must be nonempty");

  std::vector<Embedding> parts;
  std::vector<double> energy(scales.size());
  parts.reserve(scales.size());
  for (std::size_t k = 0; k < scales.size(); ++k) {
    Embedding scaled = z;
    scaled *= scales[k];
    parts.push_back(sacn(scaled, rho, rng).perturbation);
    const double nrm = parts.back().frobenius_norm();
    energy[k] = nrm * nrm;
  }

  // Softmax over squared norms, shifted for stability.
  double emax = energy.front();
  for (double e : energy) emax = std::max(emax, e);
  std::vector<double> attention(scales.size());
  double denom = 0.0;
  for (std::size_t k = 0; k < scales.size(); ++k) {
    attention[k] = std::exp(energy[k] - emax);
    denom += attention[k];
  }
  for (double& a : attention) a /= denom;

  Embedding pert(z.rows(), z.cols());
  for (std::size_t k = 0; k < scales.size(); ++k) {
    Embedding weighted = parts[k];
    weighted *= attention[k];
    pert += weighted;
  }
  Embedding residual = gn(z, rho, rng).perturbation;
  residual *= lambda;
  pert += residual;

  CorruptionResult out = finish(z, std::move(pert));
  out.attention = std::move(attention);
  return out;
}

CorruptionResult corrupt(const Embedding& z, const CorruptionContext& ctx,
                         const CorruptionConfig& config, RngStream& rng) {
  config.validate();
  switch (config.kind) {
    case CorruptionKind::kBcni:
      if (ctx.batch == nullptr) throw std::invalid_argument("bcni requires a batch context");
      return bcni(z, *ctx.batch, config.rho, rng);
    case CorruptionKind::kSacn:
      return sacn(z, config.rho, rng);
    case CorruptionKind::kGn:
      return gn(z, config.rho, rng);
    case CorruptionKind::kUn:
      return un(z, config.rho, rng);
    case CorruptionKind::kTani:
      if (ctx.prev == nullptr) throw std::invalid_argument("tani requires a previous embedding");
      return tani(z, *ctx.prev, config.rho, config.tani_eps_stab, rng);
    case CorruptionKind::kHscan:
      return hscan(z, config.rho, config.hscan_scales, config.hscan_lambda, rng);
  }
  throw std::logic_error("corrupt: unhandled kind");
}

}  // namespace corruptdiff
