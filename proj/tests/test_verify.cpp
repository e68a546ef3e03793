#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "corruptdiff/verify.hpp"
#include "doctest.h"

using namespace corruptdiff;

namespace {

// Down-sized configuration so the whole file runs in seconds; the full-size
// run lives in the acceptance suite.
VerifyConfig small_config() {
  VerifyConfig cfg;
  cfg.seed = 7;
  cfg.entropy_instances = 64;
  cfg.capacity_instances = 64;
  cfg.w2_instances = 12;
  cfg.mgf_samples = 50000;
  cfg.tail_samples = 50000;
  cfg.batch_mean_samples = 1000;
  cfg.quantile_samples = 2000;
  cfg.bl_samples = 20000;
  cfg.drift_samples = 20000;
  cfg.energy_pairs = 800;
  cfg.kl_direction_draws = 128;
  return cfg;
}

}  // namespace

TEST_CASE("every check passes at reduced size") {
  const VerifyConfig cfg = small_config();
  const std::vector<VerificationRecord> records = run_all(cfg);
  CHECK(records.size() >= 20);
  for (const auto& r : records) {
    INFO("check ", r.check_id, " margin ", r.margin);
    CHECK(r.passed);
    CHECK(r.margin >= 0.0);
    CHECK(r.n_samples > 0);
    CHECK(!r.paper_anchor.empty());
  }
}

TEST_CASE("records cite only manifest anchors") {
  const VerifyConfig cfg = small_config();
  for (const auto& r : run_all(cfg)) {
    CHECK(anchor_manifest().contains(r.paper_anchor));
  }
}

TEST_CASE("suite filters split closed-form from monte-carlo") {
  VerifyConfig cfg = small_config();
  cfg.suite = VerifySuite::kClosedForm;
  const auto closed = run_all(cfg);
  cfg.suite = VerifySuite::kMonteCarlo;
  const auto mc = run_all(cfg);
  cfg.suite = VerifySuite::kAll;
  const auto all = run_all(cfg);
  CHECK(closed.size() + mc.size() == all.size());

  for (const auto& r : closed) CHECK(r.passed);
  bool has_entropy = false;
  for (const auto& r : closed) has_entropy = has_entropy || r.check_id == "entropy_dual_path";
  CHECK(has_entropy);
  bool has_tail = false;
  for (const auto& r : mc) has_tail = has_tail || r.check_id == "exp_tail";
  CHECK(has_tail);
}

TEST_CASE("corrupting the claimed bounds makes the suite fail") {
  VerifyConfig cfg = small_config();
  cfg.bound_scale = 0.5;
  const auto records = run_all(cfg);
  int failures = 0;
  for (const auto& r : records) {
    if (!r.passed) ++failures;
  }
  CHECK(failures >= 1);
}

TEST_CASE("reports are byte-identical across reruns") {
  const VerifyConfig cfg = small_config();
  const auto first = run_all(cfg);
  const auto second = run_all(cfg);
  const ReportHeader header = ReportHeader::for_config(cfg);
  CHECK(report_to_json(header, first) == report_to_json(header, second));
  CHECK(report_to_csv(header, first) == report_to_csv(header, second));
}

TEST_CASE("closed-form checks pass across a seed sweep") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    VerifyConfig cfg = small_config();
    cfg.seed = seed;
    cfg.suite = VerifySuite::kClosedForm;
    for (const auto& r : run_all(cfg)) {
      INFO("seed ", seed, " check ", r.check_id);
      CHECK(r.passed);
    }
  }
}

TEST_CASE("report serialization carries the header block and exact fields") {
  const VerifyConfig cfg = small_config();
  const ReportHeader header = ReportHeader::for_config(cfg);
  const auto records = run_all(cfg);
  const std::string json = report_to_json(header, records);
  CHECK(json.find("\"seed\": 7") != std::string::npos);
  CHECK(json.find("\"version\": \"0.1.0\"") != std::string::npos);
  CHECK(json.find("\"rho_grid\"") != std::string::npos);
  for (const char* field : {"check_id", "paper_anchor", "claimed", "measured", "margin",
                            "n_samples", "passed", "wall_time"}) {
    CHECK(json.find(field) != std::string::npos);
  }
  const std::string csv = report_to_csv(header, records);
  CHECK(csv.find("# seed=7") != std::string::npos);
  CHECK(csv.find("check_id,paper_anchor,claimed,measured,margin,n_samples,passed,wall_time") !=
        std::string::npos);
}

TEST_CASE("wall time is measured in memory but pinned in files") {
  VerifyConfig cfg = small_config();
  cfg.suite = VerifySuite::kClosedForm;
  const auto records = run_all(cfg);
  bool any_timed = false;
  for (const auto& r : records) any_timed = any_timed || r.wall_time > 0.0;
  CHECK(any_timed);
  const std::string json = report_to_json(ReportHeader::for_config(cfg), records);
  CHECK(json.find("\"wall_time\": 0.0") != std::string::npos);
}

TEST_CASE("suite names round-trip") {
  CHECK(to_string(suite_from_string("all")) == "all");
  CHECK(to_string(suite_from_string("closed-form")) == "closed-form");
  CHECK(to_string(suite_from_string("monte-carlo")) == "monte-carlo");
  CHECK_THROWS(suite_from_string("everything"));
}
