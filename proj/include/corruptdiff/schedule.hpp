#pragma once

#include <cstddef>
#include <vector>

namespace corruptdiff {

/// Variance-preserving diffusion schedule. Stores, per step t = 1..T:
///   alpha_t      in (0,1)
///   alpha_bar_t  = prod_{s<=t} alpha_s   (strictly decreasing)
///   sigma_t      with sigma_t^2 = 1 - alpha_t
///   beta_coef_t  = (1 - alpha_t) / sqrt(1 - alpha_bar_t)
class NoiseSchedule {
 public:
  explicit NoiseSchedule(std::vector<double> alphas);

  std::size_t steps() const { return alpha_.size(); }

  // Accessors take t in [1, T].
  double alpha(std::size_t t) const { return alpha_.at(t - 1); }
  double alpha_bar(std::size_t t) const { return alpha_bar_.at(t - 1); }
  double sigma(std::size_t t) const { return sigma_.at(t - 1); }
  double sigma_sq(std::size_t t) const { return 1.0 - alpha_.at(t - 1); }
  double beta_coef(std::size_t t) const { return beta_coef_.at(t - 1); }

  double min_alpha() const;

 private:
  std::vector<double> alpha_;
  std::vector<double> alpha_bar_;
  std::vector<double> sigma_;
  std::vector<double> beta_coef_;
};

/// Linear beta ramp: beta_t = beta_start + (t-1)(beta_end-beta_start)/(T-1),
/// alpha_t = 1 - beta_t. For T = 1 the single beta is beta_start.
/// Requires 0 < beta_start <= beta_end < 1 and T >= 1.
NoiseSchedule make_linear_schedule(std::size_t t_steps, double beta_start, double beta_end);

}  // namespace corruptdiff
