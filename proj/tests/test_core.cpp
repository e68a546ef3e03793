#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <fstream>

#include "corruptdiff/corruption_config.hpp"
#include "corruptdiff/embedding.hpp"
#include "corruptdiff/rng.hpp"
#include "corruptdiff/schedule.hpp"
#include "doctest.h"

using namespace corruptdiff;

TEST_CASE("single-step schedule matches the definition") {
  const NoiseSchedule s = make_linear_schedule(1, 0.01, 0.01);
  CHECK(s.alpha(1) == doctest::Approx(0.99).epsilon(1e-15));
  CHECK(s.alpha_bar(1) == doctest::Approx(0.99).epsilon(1e-15));
  CHECK(s.sigma_sq(1) == doctest::Approx(0.01).epsilon(1e-15));
}

TEST_CASE("thousand-step linear ramp decays alpha_bar") {
  const NoiseSchedule s = make_linear_schedule(1000, 1e-4, 2e-2);
  CHECK(s.alpha_bar(1000) < s.alpha_bar(1));
  for (std::size_t t = 2; t <= 1000; ++t) CHECK(s.alpha_bar(t) < s.alpha_bar(t - 1));
}

TEST_CASE("alpha_bar equals the recomputed product") {
  const NoiseSchedule s = make_linear_schedule(257, 3e-4, 1.7e-2);
  long double prod = 1.0L;
  for (std::size_t t = 1; t <= s.steps(); ++t) {
    prod *= static_cast<long double>(s.alpha(t));
    const double rel =
        std::fabs(s.alpha_bar(t) - static_cast<double>(prod)) / static_cast<double>(prod);
    CHECK(rel < 1e-12);
    if (t > 1) {
      CHECK(s.alpha_bar(t) / s.alpha_bar(t - 1) == doctest::Approx(s.alpha(t)).epsilon(1e-12));
    }
  }
  CHECK(s.alpha_bar(1) == s.alpha(1));
}

TEST_CASE("sigma_sq is exactly 1 - alpha as stored") {
  const NoiseSchedule s = make_linear_schedule(64, 1e-3, 5e-2);
  for (std::size_t t = 1; t <= 64; ++t) {
    CHECK(s.sigma_sq(t) == 1.0 - s.alpha(t));
    CHECK(s.sigma(t) * s.sigma(t) == doctest::Approx(s.sigma_sq(t)).epsilon(1e-15));
    CHECK(s.beta_coef(t) ==
          doctest::Approx((1.0 - s.alpha(t)) / std::sqrt(1.0 - s.alpha_bar(t))).epsilon(1e-15));
  }
}

TEST_CASE("schedule rejects bad inputs") {
  CHECK_THROWS(make_linear_schedule(0, 0.01, 0.02));
  CHECK_THROWS(make_linear_schedule(10, 0.0, 0.02));
  CHECK_THROWS(make_linear_schedule(10, 0.01, 1.0));
  CHECK_THROWS(make_linear_schedule(10, 0.05, 0.01));
}

TEST_CASE("batch mean: symmetry, identity, random oracle") {
  Embedding a(1, 2, {1.0, 0.0});
  Embedding b(1, 2, {-1.0, 0.0});
  const EmbeddingBatch pair({a, b});
  CHECK(pair.mean()(0, 0) == 0.0);
  CHECK(pair.mean()(0, 1) == 0.0);

  const EmbeddingBatch single({a});
  CHECK(batch_mean(single)(0, 0) == 1.0);

  RngStream rng(11, 0);
  std::vector<Embedding> items;
  for (int i = 0; i < 5; ++i) {
    Embedding z(1, 7);
    for (auto& v : z.storage()) v = rng.next_gaussian();
    items.push_back(z);
  }
  const EmbeddingBatch batch(items);
  for (std::size_t j = 0; j < 7; ++j) {
    double sum = 0.0;
    for (const auto& z : items) sum += z(0, j);
    CHECK(batch.mean()(0, j) == doctest::Approx(sum / 5.0).epsilon(1e-12));
  }
}

TEST_CASE("batch rejects empty and mixed shapes") {
  CHECK_THROWS(EmbeddingBatch({}));
  Embedding a(1, 3);
  Embedding b(1, 4);
  CHECK_THROWS(EmbeddingBatch({a, b}));
  Embedding bad(1, 3, {1.0, std::nan(""), 0.0});
  CHECK_THROWS(EmbeddingBatch({bad}));
}

TEST_CASE("emb1 file round-trips bit-exactly") {
  RngStream rng(3, 1);
  std::vector<Embedding> items;
  for (int i = 0; i < 4; ++i) {
    Embedding z(3, 5);
    for (auto& v : z.storage()) v = rng.next_gaussian();
    items.push_back(z);
  }
  const std::string path = "roundtrip_test.emb1";
  write_emb1(path, items);
  const std::vector<Embedding> back = read_emb1(path);
  REQUIRE(back.size() == items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    REQUIRE(back[i].same_shape(items[i]));
    for (std::size_t k = 0; k < items[i].size(); ++k) {
      CHECK(back[i].storage()[k] == items[i].storage()[k]);
    }
  }
  std::remove(path.c_str());
}

TEST_CASE("emb1 rejects a bad magic") {
  const std::string path = "bad_magic.emb1";
  {
    std::ofstream os(path, std::ios::binary);
    os << "NOPE" << std::string(24, '\0');
  }
  CHECK_THROWS(read_emb1(path));
  std::remove(path.c_str());
}

TEST_CASE("csv import reads vector embeddings") {
  const std::string path = "import_test.csv";
  {
    std::ofstream os(path);
    os << "1.5,2.5,-3.0\n0.0,1.0,2.0\n";
  }
  const std::vector<Embedding> items = read_embedding_csv(path);
  REQUIRE(items.size() == 2);
  CHECK(items[0].rows() == 1);
  CHECK(items[0].cols() == 3);
  CHECK(items[0](0, 2) == -3.0);
  CHECK(items[1](0, 1) == 1.0);
  std::remove(path.c_str());
}

TEST_CASE("corruption config validation") {
  CorruptionConfig cfg;
  cfg.rho = 0.1;
  cfg.validate();
  cfg.rho = 1.5;
  CHECK_THROWS(cfg.validate());
  cfg.rho = 0.1;
  cfg.hscan_scales = {};
  CHECK_THROWS(cfg.validate());
  cfg.hscan_scales = {1.0, 1.5};
  CHECK_THROWS(cfg.validate());
  cfg.hscan_scales = {1.0};
  cfg.hscan_lambda = -0.1;
  CHECK_THROWS(cfg.validate());
}

TEST_CASE("rho grid holds the sweep magnitudes") {
  REQUIRE(kRhoGrid.size() == 6);
  CHECK(kRhoGrid.front() == 0.025);
  CHECK(kRhoGrid.back() == 0.20);
}
