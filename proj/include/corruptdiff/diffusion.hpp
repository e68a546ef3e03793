#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "corruptdiff/corruption_config.hpp"
#include "corruptdiff/embedding.hpp"
#include "corruptdiff/gaussian.hpp"
#include "corruptdiff/matrix.hpp"
#include "corruptdiff/rng.hpp"
#include "corruptdiff/schedule.hpp"

namespace corruptdiff {

struct LatentState {
  std::vector<double> x;
  std::size_t t = 0;
};

/// Linear noise predictor: eps(x, t, z) = A_t x + B_t vec(z). Its Lipschitz
/// constant in the conditioning, max_t |B_t|_2, is kept current on every
/// parameter update.
class LinearDenoiser {
 public:
  LinearDenoiser(std::vector<Matrix> a, std::vector<Matrix> b);

  static LinearDenoiser zero(std::size_t latent_dim, std::size_t embed_dim, std::size_t steps);

  /// The predictor minimizing the denoising loss in the linear world
  /// x0 = W z + u: A_t = sqrt(1-abar_t) I, B_t = -sqrt(abar_t (1-abar_t)) W.
  static LinearDenoiser bayes_optimal(const Matrix& w, const NoiseSchedule& schedule);

  std::size_t steps() const { return a_.size(); }
  std::size_t latent_dim() const { return a_.front().rows(); }
  std::size_t embed_dim() const { return b_.front().cols(); }

  const Matrix& a(std::size_t t) const { return a_.at(t - 1); }
  const Matrix& b(std::size_t t) const { return b_.at(t - 1); }
  void set_step(std::size_t t, Matrix a, Matrix b);
  void apply_update(std::size_t t, const Matrix& da, const Matrix& db, double lr);
  void refresh_lipschitz();

  double lipschitz_z() const { return lipschitz_z_; }
  double recompute_lipschitz() const;

  std::vector<double> predict(std::span<const double> x, std::size_t t,
                              const Embedding& z) const;

 private:
  std::vector<Matrix> a_;
  std::vector<Matrix> b_;
  double lipschitz_z_ = 0.0;
};

/// Forward noising x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps.
struct ForwardDraw {
  std::vector<double> x_t;
  std::vector<double> eps;
};
ForwardDraw forward_noise(std::span<const double> x0, std::size_t t,
                          const NoiseSchedule& schedule, RngStream& rng);

/// One reverse update
///   x_{t-1} = (x_t - beta_coef_t * eps(x_t, t, z)) / sqrt(alpha_t) [+ sigma_t w]
/// with the noise term only in stochastic mode.
std::vector<double> reverse_step(std::span<const double> x_t, std::size_t t, const Embedding& z,
                                 const LinearDenoiser& denoiser, const NoiseSchedule& schedule,
                                 std::span<const double> omega, bool stochastic);

/// Paired clean/corrupted reverse trajectories from a shared start and shared
/// per-step noise draws. delta_sq[t] = |x_t_corrupted - x_t_clean|^2 for
/// t = 0..T (delta_sq[T] = 0 by construction).
struct TrajectoryPair {
  std::vector<LatentState> clean;
  std::vector<LatentState> corrupted;
  std::vector<double> delta_sq;

  double final_delta_sq() const { return delta_sq.front(); }
};
TrajectoryPair simulate_pair(std::span<const double> x_start, const Embedding& z,
                             const Embedding& z_tilde, const LinearDenoiser& denoiser,
                             const NoiseSchedule& schedule, RngStream& rng,
                             bool stochastic = false);

/// The analytic toy world: x0 = W z + u with u ~ N(0, I), z ~ N(0, I_D).
struct ToyWorld {
  Matrix w;  // latent_dim x embed_dim

  std::size_t latent_dim() const { return w.rows(); }
  std::size_t embed_dim() const { return w.cols(); }
};
ToyWorld make_toy_world(std::size_t latent_dim, std::size_t embed_dim, RngStream& rng);

struct TrainSample {
  std::vector<double> x0;
  Embedding z;  // 1 x D
};
std::vector<TrainSample> make_dataset(const ToyWorld& world, std::size_t count, RngStream& rng);

/// One pass of mini-batch gradient descent on the denoising loss with
/// corrupted conditioning. Returns the mean per-sample loss.
double train_epoch(const std::vector<TrainSample>& dataset, const CorruptionConfig& config,
                   LinearDenoiser& denoiser, const NoiseSchedule& schedule, double lr,
                   std::size_t batch_size, RngStream& rng);

// ----- Ensemble machinery for the dimension-compression checks -----

struct EnsembleConfig {
  std::size_t latent_dim = 16;
  std::size_t embed_dim = 32;
  std::size_t rank = 2;       // corrupted subspace dimension
  std::size_t steps = 50;
  double rho = 0.1;
  std::size_t n_pairs = 10000;
  bool stochastic = false;
};

/// Mean deviation energies of an ensemble of paired trajectories under the
/// Gaussian subspace model z~ = z + rho * M * eta (isotropic when M covers
/// the full space). final_delta_sq keeps the per-pair terminal energies for
/// paired significance tests.
struct EnsembleStats {
  std::vector<double> mean_delta_sq;                  // index t = 0..T
  std::vector<std::vector<double>> delta_sq_samples;  // [pair][t], kept for SE computations
  double k_sub = 0.0;  // max_t |B_t M|_2 for this ensemble's M
};

/// Runs paired trajectories corrupted along the given subspace map. Each pair
/// derives its own substream, so results do not depend on scheduling.
EnsembleStats run_subspace_ensemble(const EnsembleConfig& config, const LinearDenoiser& denoiser,
                                    const NoiseSchedule& schedule, const SubspaceMap& map,
                                    RngStream& rng);

/// Isotropic variant: z~ = z + rho * eps with eps ~ N(0, I_D).
EnsembleStats run_isotropic_ensemble(const EnsembleConfig& config, const LinearDenoiser& denoiser,
                                     const NoiseSchedule& schedule, RngStream& rng);

/// Per-step energy inequality
///   E[d_{t-1}^2] <= (E[d_t^2] + beta_t^2 rho^2 K^2 rank) / alpha_t + sigma_t^2 m
/// checked with a 3-standard-error allowance on the paired statistic.
struct EnergyStepCheck {
  std::size_t t = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;  // 3 SE
  bool passed = false;
};
std::vector<EnergyStepCheck> energy_bound_check(const EnsembleStats& stats, double k_norm,
                                                std::size_t rank, double rho,
                                                const NoiseSchedule& schedule,
                                                std::size_t latent_dim);

/// Terminal-energy gap between two paired ensembles: mean difference of
/// final delta^2 and the standard error of that mean.
struct GapEstimate {
  double gap = 0.0;
  double se = 0.0;
};
GapEstimate cumulative_gap(const EnsembleStats& subspace, const EnsembleStats& isotropic);

/// Lower-bound scalar alpha_t - beta_t^2 rho^2 ell^2 dim for the reverse-step
/// contraction; pure arithmetic.
double spectral_gap_scalar(std::size_t t, double rho, double ell, std::size_t dim,
                           const NoiseSchedule& schedule);

}  // namespace corruptdiff
