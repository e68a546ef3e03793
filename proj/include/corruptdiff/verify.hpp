#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "corruptdiff/rng.hpp"

namespace corruptdiff {

inline constexpr const char* kVersion = "0.1.0";

/// One bound certificate. Margin is claimed - measured; a record passes when
/// margin >= -tolerance for its check. Records fold their tolerance into
/// `claimed` (statistical slack for Monte Carlo checks, the permitted
/// discrepancy for closed-form agreement checks), so passed == (margin >= 0).
/// wall_time holds measured seconds in memory; serialized reports pin it to
/// zero so identical seeds produce identical bytes.
struct VerificationRecord {
  std::string check_id;
  std::string paper_anchor;
  double claimed = 0.0;
  double measured = 0.0;
  double margin = 0.0;
  long long n_samples = 0;
  bool passed = false;
  double wall_time = 0.0;
};

enum class VerifySuite { kAll, kClosedForm, kMonteCarlo };

VerifySuite suite_from_string(const std::string& name);
std::string to_string(VerifySuite suite);

struct VerifyConfig {
  std::uint64_t seed = 7;
  VerifySuite suite = VerifySuite::kAll;

  /// Test hook: every claimed bound is multiplied by this before comparison.
  /// Anything other than 1.0 is for mutation-testing the harness itself.
  double bound_scale = 1.0;

  // Sample/instance counts (defaults are the sizes the certificates are
  // quoted at).
  std::size_t entropy_instances = 1000;
  std::size_t capacity_instances = 1000;
  std::size_t w2_instances = 64;
  std::size_t mgf_samples = 1000000;
  std::size_t tail_samples = 1000000;
  std::size_t batch_mean_samples = 10000;
  std::size_t quantile_samples = 10000;
  std::size_t bl_samples = 100000;
  std::size_t drift_samples = 100000;
  std::size_t energy_pairs = 10000;
  std::size_t kl_direction_draws = 512;

  // Toy-world geometry shared by the trajectory-level checks.
  std::size_t latent_dim = 16;
  std::size_t embed_dim = 32;
  std::size_t rank = 2;
  std::size_t steps = 50;
  double rho = 0.1;
};

// Individual checks. Each consumes only its own stream, so any subset can be
// re-run in isolation and reproduce the full-suite values.
std::vector<VerificationRecord> check_entropy_capacity(const VerifyConfig& cfg, RngStream rng);
std::vector<VerificationRecord> check_w2_scaling(const VerifyConfig& cfg, RngStream rng);
std::vector<VerificationRecord> check_lsi_constant(const VerifyConfig& cfg, RngStream rng);
std::vector<VerificationRecord> check_kl_linear_in_rank(const VerifyConfig& cfg, RngStream rng);
std::vector<VerificationRecord> check_wasserstein_radius(const VerifyConfig& cfg, RngStream rng);
std::vector<VerificationRecord> check_spectral_gap(const VerifyConfig& cfg, RngStream rng);
std::vector<VerificationRecord> check_mgf_subgaussian(const VerifyConfig& cfg, RngStream rng);
std::vector<VerificationRecord> check_exp_tail(const VerifyConfig& cfg, RngStream rng);
std::vector<VerificationRecord> check_batch_mean(const VerifyConfig& cfg, RngStream rng);
std::vector<VerificationRecord> check_bcni_covariance(const VerifyConfig& cfg, RngStream rng);
std::vector<VerificationRecord> check_bl_variance(const VerifyConfig& cfg, RngStream rng);
std::vector<VerificationRecord> check_score_drift(const VerifyConfig& cfg, RngStream rng);
std::vector<VerificationRecord> check_energy_and_gap(const VerifyConfig& cfg, RngStream rng);

/// Runs the configured suite; record order is fixed regardless of the worker
/// count. Throws only on internal errors; bound violations come back as
/// failed records.
std::vector<VerificationRecord> run_all(const VerifyConfig& cfg);

/// Anchors every record must cite; anything else is an orphan check.
const std::set<std::string>& anchor_manifest();

struct ReportHeader {
  std::uint64_t seed = 7;
  std::string version = kVersion;
  std::string suite = "all";
  std::vector<double> rho_grid;

  static ReportHeader for_config(const VerifyConfig& cfg);
};

std::string report_to_json(const ReportHeader& header,
                           const std::vector<VerificationRecord>& records);
std::string report_to_csv(const ReportHeader& header,
                          const std::vector<VerificationRecord>& records);

}  // namespace corruptdiff
