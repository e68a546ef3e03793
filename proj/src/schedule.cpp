#include "corruptdiff/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace corruptdiff {

NoiseSchedule::NoiseSchedule(std::vector<double> alphas) : alpha_(std::move(alphas)) {
  if (alpha_.empty()) throw std::invalid_argument("schedule needs at least one step");
  alpha_bar_.resize(alpha_.size());
  sigma_.resize(alpha_.size());
  beta_coef_.resize(alpha_.size());
  double bar = 1.0;
  for (std::size_t i = 0; i < alpha_.size(); ++i) {
    const double a = alpha_[i];
    if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("alpha_t must lie in (0,1)");
    bar *= a;
    alpha_bar_[i] = bar;
    sigma_[i] = std::sqrt(1.0 - a);
    beta_coef_[i] = (1.0 - a) / std::sqrt(1.0 - bar);
  }
}

double NoiseSchedule::min_alpha() const {
  return *std::min_element(alpha_.begin(), alpha_.end());
}

NoiseSchedule make_linear_schedule(std::size_t t_steps, double beta_start, double beta_end) {
  if (t_steps == 0) throw std::invalid_argument("schedule needs at least one step");
  if (!(beta_start > 0.0 && beta_end < 1.0 && beta_start <= beta_end)) {
    throw std::invalid_argument("beta bounds must satisfy 0 < beta_start <= beta_end < 1");
  }
  std::vector<double> alphas(t_steps);
  for (std::size_t t = 1; t <= t_steps; ++t) {
    const double frac =
        t_steps == 1 ? 0.0 : static_cast<double>(t - 1) / static_cast<double>(t_steps - 1);
    alphas[t - 1] = 1.0 - (beta_start + frac * (beta_end - beta_start));
  }
  return NoiseSchedule(std::move(alphas));
}

}  // namespace corruptdiff
