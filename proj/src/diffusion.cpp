#include "corruptdiff/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "corruptdiff/embed_corrupt.hpp"
#include "corruptdiff/linalg.hpp"
#include "corruptdiff/parallel.hpp"

namespace corruptdiff {

LinearDenoiser::LinearDenoiser(std::vector<Matrix> a, std::vector<Matrix> b)
    : a_(std::move(a)), b_(std::move(b)) {
  if (a_.empty() || a_.size() != b_.size()) {
    throw std::invalid_argument("denoiser: need one (A_t, B_t) pair per step");
  }
  for (std::size_t i = 0; i < a_.size(); ++i) {
    if (a_[i].rows() != a_[i].cols() || a_[i].rows() != b_[i].rows() ||
        !a_[i].same_shape(a_.front()) || !b_[i].same_shape(b_.front())) {
      throw std::invalid_argument("denoiser: inconsistent parameter shapes");
    }
  }
  refresh_lipschitz();
}

LinearDenoiser LinearDenoiser::zero(std::size_t latent_dim, std::size_t embed_dim,
                                    std::size_t steps) {
  std::vector<Matrix> a(steps, Matrix(latent_dim, latent_dim));
  std::vector<Matrix> b(steps, Matrix(latent_dim, embed_dim));
  return LinearDenoiser(std::move(a), std::move(b));
}

LinearDenoiser LinearDenoiser::bayes_optimal(const Matrix& w, const NoiseSchedule& schedule) {
  const std::size_t steps = schedule.steps();
  std::vector<Matrix> a;
  std::vector<Matrix> b;
  a.reserve(steps);
  b.reserve(steps);
  for (std::size_t t = 1; t <= steps; ++t) {
    const double abar = schedule.alpha_bar(t);
    const double sbar = std::sqrt(1.0 - abar);
    Matrix at = Matrix::identity(w.rows());
    at *= sbar;
    Matrix bt = w;
    bt *= -std::sqrt(abar) * sbar;
    a.push_back(std::move(at));
    b.push_back(std::move(bt));
  }
  return LinearDenoiser(std::move(a), std::move(b));
}

void LinearDenoiser::set_step(std::size_t t, Matrix a, Matrix b) {
  if (!a.same_shape(a_.at(t - 1)) || !b.same_shape(b_.at(t - 1))) {
    throw std::invalid_argument("denoiser: shape mismatch in set_step");
  }
  a_[t - 1] = std::move(a);
  b_[t - 1] = std::move(b);
  refresh_lipschitz();
}

void LinearDenoiser::apply_update(std::size_t t, const Matrix& da, const Matrix& db, double lr) {
  Matrix& at = a_.at(t - 1);
  Matrix& bt = b_.at(t - 1);
  if (!da.same_shape(at) || !db.same_shape(bt)) {
    throw std::invalid_argument("denoiser: shape mismatch in apply_update");
  }
  for (std::size_t i = 0; i < at.size(); ++i) at.storage()[i] -= lr * da.storage()[i];
  for (std::size_t i = 0; i < bt.size(); ++i) bt.storage()[i] -= lr * db.storage()[i];
}

void LinearDenoiser::refresh_lipschitz() { lipschitz_z_ = recompute_lipschitz(); }

double LinearDenoiser::recompute_lipschitz() const {
  double best = 0.0;
  for (const Matrix& bt : b_) best = std::max(best, operator_norm(bt));
  return best;
}

std::vector<double> LinearDenoiser::predict(std::span<const double> x, std::size_t t,
                                            const Embedding& z) const {
  const Matrix& at = a(t);
  const Matrix& bt = b(t);
  if (x.size() != at.cols() || z.size() != bt.cols()) {
    throw std::invalid_argument("denoiser: input shape mismatch");
  }
  std::vector<double> out = at * x;
  // z enters flattened row-major; L = 1 embeddings are plain vectors.
  for (std::size_t i = 0; i < bt.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < bt.cols(); ++j) s += bt(i, j) * z.storage()[j];
    out[i] += s;
  }
  return out;
}

ForwardDraw forward_noise(std::span<const double> x0, std::size_t t,
                          const NoiseSchedule& schedule, RngStream& rng) {
  if (t < 1 || t > schedule.steps()) throw std::invalid_argument("forward_noise: step out of range");
  const double abar = schedule.alpha_bar(t);
  const double a_coef = std::sqrt(abar);
  const double e_coef = std::sqrt(1.0 - abar);
  ForwardDraw out;
  out.eps.resize(x0.size());
  out.x_t.resize(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i) {
    out.eps[i] = rng.next_gaussian();
    out.x_t[i] = a_coef * x0[i] + e_coef * out.eps[i];
  }
  return out;
}

std::vector<double> reverse_step(std::span<const double> x_t, std::size_t t, const Embedding& z,
                                 const LinearDenoiser& denoiser, const NoiseSchedule& schedule,
                                 std::span<const double> omega, bool stochastic) {
  if (t < 1 || t > schedule.steps()) throw std::invalid_argument("reverse_step: step out of range");
  const double inv_sqrt_alpha = 1.0 / std::sqrt(schedule.alpha(t));
  const double beta = schedule.beta_coef(t);
  const std::vector<double> eps = denoiser.predict(x_t, t, z);
  std::vector<double> out(x_t.size());
  for (std::size_t i = 0; i < x_t.size(); ++i) {
    out[i] = inv_sqrt_alpha * (x_t[i] - beta * eps[i]);
  }
  if (stochastic) {
    if (omega.size() != x_t.size()) throw std::invalid_argument("reverse_step: omega shape");
    const double sigma = schedule.sigma(t);
    for (std::size_t i = 0; i < x_t.size(); ++i) out[i] += sigma * omega[i];
  }
  return out;
}

TrajectoryPair simulate_pair(std::span<const double> x_start, const Embedding& z,
                             const Embedding& z_tilde, const LinearDenoiser& denoiser,
                             const NoiseSchedule& schedule, RngStream& rng, bool stochastic) {
  if (!z.same_shape(z_tilde)) throw std::invalid_argument("simulate_pair: embedding shape mismatch");
  const std::size_t steps = schedule.steps();
  TrajectoryPair pair;
  pair.clean.resize(steps + 1);
  pair.corrupted.resize(steps + 1);
  pair.delta_sq.assign(steps + 1, 0.0);

  std::vector<double> xc(x_start.begin(), x_start.end());
  std::vector<double> xr = xc;
  pair.clean[steps] = LatentState{xc, steps};
  pair.corrupted[steps] = LatentState{xr, steps};

  std::vector<double> omega(x_start.size(), 0.0);
  for (std::size_t t = steps; t >= 1; --t) {
    if (stochastic) {
      for (auto& w : omega) w = rng.next_gaussian();  // shared by both trajectories
    }
    xc = reverse_step(xc, t, z, denoiser, schedule, omega, stochastic);
    xr = reverse_step(xr, t, z_tilde, denoiser, schedule, omega, stochastic);
    double dsq = 0.0;
    for (std::size_t i = 0; i < xc.size(); ++i) {
      const double d = xr[i] - xc[i];
      dsq += d * d;
    }
    pair.clean[t - 1] = LatentState{xc, t - 1};
    pair.corrupted[t - 1] = LatentState{xr, t - 1};
    pair.delta_sq[t - 1] = dsq;
  }
  return pair;
}

ToyWorld make_toy_world(std::size_t latent_dim, std::size_t embed_dim, RngStream& rng) {
  Matrix w(latent_dim, embed_dim);
  const double scale = 1.0 / std::sqrt(static_cast<double>(embed_dim));
  for (double& v : w.storage()) v = scale * rng.next_gaussian();
  return ToyWorld{std::move(w)};
}

std::vector<TrainSample> make_dataset(const ToyWorld& world, std::size_t count, RngStream& rng) {
  std::vector<TrainSample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Embedding z(1, world.embed_dim());
    for (double& v : z.storage()) v = rng.next_gaussian();
    std::vector<double> x0 = world.w * std::span<const double>(z.storage());
    for (double& v : x0) v += rng.next_gaussian();
    out.push_back(TrainSample{std::move(x0), std::move(z)});
  }
  return out;
}

double train_epoch(const std::vector<TrainSample>& dataset, const CorruptionConfig& config,
                   LinearDenoiser& denoiser, const NoiseSchedule& schedule, double lr,
                   std::size_t batch_size, RngStream& rng) {
  if (dataset.empty()) throw std::invalid_argument("train_epoch: empty dataset");
  if (!(lr >= 0.0)) throw std::invalid_argument("train_epoch: learning rate must be >= 0");
  if (batch_size == 0) throw std::invalid_argument("train_epoch: batch size must be >= 1");
  config.validate();

  const std::size_t steps = schedule.steps();
  const std::size_t m = denoiser.latent_dim();
  double total_loss = 0.0;
  std::size_t total_count = 0;

  for (std::size_t start = 0; start < dataset.size(); start += batch_size) {
    const std::size_t end = std::min(dataset.size(), start + batch_size);
    std::vector<Embedding> zs;
    zs.reserve(end - start);
    for (std::size_t i = start; i < end; ++i) zs.push_back(dataset[i].z);
    const EmbeddingBatch batch(std::move(zs));

    std::vector<Matrix> grad_a(steps, Matrix(m, m));
    std::vector<Matrix> grad_b(steps, Matrix(m, denoiser.embed_dim()));
    std::vector<bool> touched(steps, false);

    for (std::size_t i = start; i < end; ++i) {
      const TrainSample& sample = dataset[i];
      CorruptionContext ctx;
      ctx.batch = &batch;
      // Temporal corruption pairs each item with its predecessor in the batch.
      const Embedding& prev = i > start ? dataset[i - 1].z : dataset[i].z;
      ctx.prev = &prev;
      const Embedding z_tilde = corrupt(sample.z, ctx, config, rng).corrupted;

      const std::size_t t = 1 + static_cast<std::size_t>(rng.next_u64() % steps);
      const ForwardDraw fwd = forward_noise(sample.x0, t, schedule, rng);
      const std::vector<double> pred = denoiser.predict(fwd.x_t, t, z_tilde);

      std::vector<double> resid(m);
      double loss = 0.0;
      for (std::size_t r = 0; r < m; ++r) {
        resid[r] = pred[r] - fwd.eps[r];
        loss += resid[r] * resid[r];
      }
      total_loss += loss;
      ++total_count;

      Matrix& ga = grad_a[t - 1];
      Matrix& gb = grad_b[t - 1];
      touched[t - 1] = true;
      for (std::size_t r = 0; r < m; ++r) {
        const double rr = 2.0 * resid[r];
        for (std::size_t c = 0; c < m; ++c) ga(r, c) += rr * fwd.x_t[c];
        for (std::size_t c = 0; c < gb.cols(); ++c) gb(r, c) += rr * z_tilde.storage()[c];
      }
    }

    if (lr > 0.0) {
      for (std::size_t t = 1; t <= steps; ++t) {
        if (touched[t - 1]) denoiser.apply_update(t, grad_a[t - 1], grad_b[t - 1], lr);
      }
    }
  }
  denoiser.refresh_lipschitz();
  return total_loss / static_cast<double>(total_count);
}

namespace {

EnsembleStats run_ensemble(const EnsembleConfig& config, const LinearDenoiser& denoiser,
                           const NoiseSchedule& schedule, const Matrix* map, RngStream& rng) {
  if (config.n_pairs == 0) throw std::invalid_argument("ensemble: need at least one pair");
  const std::size_t steps = schedule.steps();
  const std::size_t m = config.latent_dim;
  const std::size_t d_embed = config.embed_dim;

  EnsembleStats stats;
  stats.delta_sq_samples.assign(config.n_pairs, {});

  parallel_for(config.n_pairs, [&](std::size_t i) {
    RngStream local = rng.substream(i);
    std::vector<double> x_start(m);
    for (auto& v : x_start) v = local.next_gaussian();

    Embedding z(1, d_embed);  // cancels in the linear pair dynamics; kept zero
    Embedding z_tilde = z;
    if (map != nullptr) {
      std::vector<double> eta(map->cols());
      for (auto& v : eta) v = local.next_gaussian();
      const std::vector<double> push = *map * eta;
      for (std::size_t j = 0; j < d_embed; ++j) z_tilde.storage()[j] += config.rho * push[j];
    } else {
      for (std::size_t j = 0; j < d_embed; ++j) {
        z_tilde.storage()[j] += config.rho * local.next_gaussian();
      }
    }

    TrajectoryPair pair =
        simulate_pair(x_start, z, z_tilde, denoiser, schedule, local, config.stochastic);
    stats.delta_sq_samples[i] = std::move(pair.delta_sq);
  });

  stats.mean_delta_sq.assign(steps + 1, 0.0);
  for (const auto& traj : stats.delta_sq_samples) {
    for (std::size_t t = 0; t <= steps; ++t) stats.mean_delta_sq[t] += traj[t];
  }
  for (auto& v : stats.mean_delta_sq) v /= static_cast<double>(config.n_pairs);
  return stats;
}

}  // namespace

EnsembleStats run_subspace_ensemble(const EnsembleConfig& config, const LinearDenoiser& denoiser,
                                    const NoiseSchedule& schedule, const SubspaceMap& map,
                                    RngStream& rng) {
  if (map.ambient_dim() != config.embed_dim || map.rank() != config.rank) {
    throw std::invalid_argument("ensemble: subspace map shape mismatch");
  }
  EnsembleStats stats = run_ensemble(config, denoiser, schedule, &map.m, rng);
  double k_sub = 0.0;
  for (std::size_t t = 1; t <= schedule.steps(); ++t) {
    k_sub = std::max(k_sub, operator_norm(denoiser.b(t) * map.m));
  }
  stats.k_sub = k_sub;
  return stats;
}

EnsembleStats run_isotropic_ensemble(const EnsembleConfig& config, const LinearDenoiser& denoiser,
                                     const NoiseSchedule& schedule, RngStream& rng) {
  EnsembleStats stats = run_ensemble(config, denoiser, schedule, nullptr, rng);
  stats.k_sub = denoiser.lipschitz_z();
  return stats;
}

std::vector<EnergyStepCheck> energy_bound_check(const EnsembleStats& stats, double k_norm,
                                                std::size_t rank, double rho,
                                                const NoiseSchedule& schedule,
                                                std::size_t latent_dim) {
  if (stats.delta_sq_samples.empty()) throw std::invalid_argument("energy check: empty ensemble");
  const std::size_t steps = schedule.steps();
  const std::size_t n = stats.delta_sq_samples.size();
  std::vector<EnergyStepCheck> checks;
  checks.reserve(steps);

  for (std::size_t t = steps; t >= 1; --t) {
    const double inv_alpha = 1.0 / schedule.alpha(t);
    // Paired statistic g_i = d_{t-1,i}^2 - d_{t,i}^2 / alpha_t; the bound says
    // E[g] <= beta^2 rho^2 K^2 d / alpha_t + sigma_t^2 m.
    double mean_g = 0.0;
    for (const auto& traj : stats.delta_sq_samples) {
      mean_g += traj[t - 1] - inv_alpha * traj[t];
    }
    mean_g /= static_cast<double>(n);
    double var_g = 0.0;
    for (const auto& traj : stats.delta_sq_samples) {
      const double g = traj[t - 1] - inv_alpha * traj[t];
      var_g += (g - mean_g) * (g - mean_g);
    }
    var_g /= static_cast<double>(n > 1 ? n - 1 : 1);
    const double se = std::sqrt(var_g / static_cast<double>(n));

    const double beta = schedule.beta_coef(t);
    const double drift = inv_alpha * beta * beta * rho * rho * k_norm * k_norm *
                         static_cast<double>(rank);
    const double noise = schedule.sigma_sq(t) * static_cast<double>(latent_dim);

    EnergyStepCheck check;
    check.t = t;
    check.lhs = mean_g;
    check.rhs = drift + noise;
    check.slack = 3.0 * se;
    check.passed = mean_g <= check.rhs + check.slack;
    checks.push_back(check);
  }
  return checks;
}

GapEstimate cumulative_gap(const EnsembleStats& subspace, const EnsembleStats& isotropic) {
  const std::size_t n = subspace.delta_sq_samples.size();
  if (n == 0 || n != isotropic.delta_sq_samples.size()) {
    throw std::invalid_argument("cumulative_gap: ensembles must pair up");
  }
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean += subspace.delta_sq_samples[i].front() - isotropic.delta_sq_samples[i].front();
  }
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double g =
        subspace.delta_sq_samples[i].front() - isotropic.delta_sq_samples[i].front();
    var += (g - mean) * (g - mean);
  }
  var /= static_cast<double>(n > 1 ? n - 1 : 1);
  return GapEstimate{mean, std::sqrt(var / static_cast<double>(n))};
}

double spectral_gap_scalar(std::size_t t, double rho, double ell, std::size_t dim,
                           const NoiseSchedule& schedule) {
  const double beta = schedule.beta_coef(t);
  return schedule.alpha(t) - beta * beta * rho * rho * ell * ell * static_cast<double>(dim);
}

}  // namespace corruptdiff
