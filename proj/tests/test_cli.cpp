// End-to-end runs of the installed binary: exit codes, file outputs, and
// byte-identical reruns. The binary path comes from CORRUPTDIFF_BIN.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "corruptdiff/embedding.hpp"
#include "corruptdiff/rng.hpp"
#include "doctest.h"

namespace {

std::string binary_path() {
  if (const char* env = std::getenv("CORRUPTDIFF_BIN")) return env;
  // Fallbacks for running the test binary by hand from the build tree.
  for (const char* candidate :
       {"../tools/corruptdiff", "tools/corruptdiff", "./corruptdiff"}) {
    if (std::ifstream(candidate).good()) return candidate;
  }
  REQUIRE_MESSAGE(false, "CORRUPTDIFF_BIN must point at the CLI binary");
  return "";
}

struct RunResult {
  int exit_code = -1;
  std::string output;
};

RunResult run(const std::string& args) {
  const std::string out_file = "cli_out.tmp";
  const std::string cmd = binary_path() + " " + args + " > " + out_file + " 2>&1";
  const int status = std::system(cmd.c_str());
  RunResult res;
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream is(out_file);
  std::stringstream ss;
  ss << is.rdbuf();
  res.output = ss.str();
  std::remove(out_file.c_str());
  return res;
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is.good());
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_demo_embeddings(const std::string& path, std::uint64_t seed) {
  corruptdiff::RngStream rng(seed, 0);
  std::vector<corruptdiff::Embedding> items;
  for (int i = 0; i < 5; ++i) {
    corruptdiff::Embedding z(1, 8);
    for (auto& v : z.storage()) v = rng.next_gaussian();
    items.push_back(z);
  }
  corruptdiff::write_emb1(path, items);
}

}  // namespace

TEST_CASE("no arguments is a usage error") {
  const RunResult res = run("");
  CHECK(res.exit_code == 2);
}

TEST_CASE("unknown flag names the offender") {
  const RunResult res = run("verify --nonsense 3");
  CHECK(res.exit_code == 2);
  CHECK(res.output.find("--nonsense") != std::string::npos);
}

TEST_CASE("missing required flag names the flag") {
  const RunResult res = run("corrupt embed --kind bcni");
  CHECK(res.exit_code == 2);
  CHECK(res.output.find("--rho") != std::string::npos);
}

TEST_CASE("corrupt embed round-trips through emb1 deterministically") {
  write_demo_embeddings("cli_in.emb1", 99);
  const RunResult first =
      run("corrupt embed --kind bcni --rho 0.1 --in cli_in.emb1 --out cli_out1.emb1 --seed 5");
  CHECK(first.exit_code == 0);
  const RunResult second =
      run("corrupt embed --kind bcni --rho 0.1 --in cli_in.emb1 --out cli_out2.emb1 --seed 5");
  CHECK(second.exit_code == 0);
  CHECK(slurp("cli_out1.emb1") == slurp("cli_out2.emb1"));

  // A different seed changes the bytes.
  const RunResult third =
      run("corrupt embed --kind bcni --rho 0.1 --in cli_in.emb1 --out cli_out3.emb1 --seed 6");
  CHECK(third.exit_code == 0);
  CHECK(slurp("cli_out1.emb1") != slurp("cli_out3.emb1"));

  const std::vector<corruptdiff::Embedding> out = corruptdiff::read_emb1("cli_out1.emb1");
  CHECK(out.size() == 5);
  CHECK(out.front().cols() == 8);

  for (const char* f : {"cli_in.emb1", "cli_out1.emb1", "cli_out2.emb1", "cli_out3.emb1"}) {
    std::remove(f);
  }
}

TEST_CASE("tani requires --prev") {
  write_demo_embeddings("cli_in.emb1", 100);
  const RunResult res =
      run("corrupt embed --kind tani --rho 0.1 --in cli_in.emb1 --out cli_out.emb1 --seed 5");
  CHECK(res.exit_code == 2);
  CHECK(res.output.find("--prev") != std::string::npos);
  std::remove("cli_in.emb1");
}

TEST_CASE("corrupt text transforms a prompt file deterministically") {
  {
    std::ofstream os("cli_prompts.txt");
    os << "a quick brown fox jumps over the lazy dog near the old barn\n";
    os << "the cat sat on the mat\n";
  }
  const RunResult first =
      run("corrupt text --op replace --eta 0.2 --in cli_prompts.txt --out cli_t1.txt --seed 9");
  CHECK(first.exit_code == 0);
  const RunResult second =
      run("corrupt text --op replace --eta 0.2 --in cli_prompts.txt --out cli_t2.txt --seed 9");
  CHECK(second.exit_code == 0);
  CHECK(slurp("cli_t1.txt") == slurp("cli_t2.txt"));
  CHECK(slurp("cli_t1.txt") != slurp("cli_prompts.txt"));
  for (const char* f : {"cli_prompts.txt", "cli_t1.txt", "cli_t2.txt"}) std::remove(f);
}

TEST_CASE("verify closed-form writes reports and exits zero") {
  const RunResult res = run(
      "verify --suite closed-form --seed 7 --out-json cli_report.json --out-csv cli_report.csv");
  CHECK(res.exit_code == 0);
  const std::string json = slurp("cli_report.json");
  CHECK(json.find("\"records\"") != std::string::npos);
  CHECK(json.find("entropy_dual_path") != std::string::npos);
  const std::string csv = slurp("cli_report.csv");
  CHECK(csv.find("# seed=7") != std::string::npos);
  std::remove("cli_report.json");
  std::remove("cli_report.csv");
}

TEST_CASE("verify fails with a corrupted bound constant") {
  // With every claimed constant halved, at least one certificate must break.
  const RunResult res = run("verify --suite all --seed 7 --bound-scale 0.5");
  CHECK(res.exit_code == 1);
  CHECK(res.output.find("[FAIL]") != std::string::npos);
}

TEST_CASE("config file fills defaults but flags win") {
  {
    std::ofstream os("cli_cfg.json");
    os << "{\"suite\": \"closed-form\", \"seed\": 21}\n";
  }
  const RunResult from_cfg = run("verify --config cli_cfg.json --out-csv cli_cfg_a.csv");
  CHECK(from_cfg.exit_code == 0);
  CHECK(slurp("cli_cfg_a.csv").find("# seed=21") != std::string::npos);

  const RunResult overridden =
      run("verify --config cli_cfg.json --seed 22 --out-csv cli_cfg_b.csv");
  CHECK(overridden.exit_code == 0);
  CHECK(slurp("cli_cfg_b.csv").find("# seed=22") != std::string::npos);
  for (const char* f : {"cli_cfg.json", "cli_cfg_a.csv", "cli_cfg_b.csv"}) std::remove(f);
}

TEST_CASE("simulate emits the per-step table") {
  const RunResult res = run("simulate --d 2 --D 8 --m 4 --T 6 --rho 0.1 --n 300 --seed 3 "
                            "--out cli_sim.csv");
  CHECK(res.exit_code == 0);
  const std::string csv = slurp("cli_sim.csv");
  CHECK(csv.find("t,mean_delta_sq_sub,mean_delta_sq_iso,bound_rhs,pass") != std::string::npos);
  int rows = 0;
  for (char c : csv) {
    if (c == '\n') ++rows;
  }
  CHECK(rows == 3 + 1 + 6);  // header block + column header + 6 steps
  std::remove("cli_sim.csv");
}

TEST_CASE("train-toy with zero epochs writes a header-only csv") {
  const RunResult res =
      run("train-toy --epochs 0 --batch 32 --rho 0 --kind gn --seed 4 --out cli_train.csv");
  CHECK(res.exit_code == 0);
  const std::string csv = slurp("cli_train.csv");
  CHECK(csv.find("epoch,mean_loss") != std::string::npos);
  CHECK(csv.find("\n0,") == std::string::npos);  // no data rows
  std::remove("cli_train.csv");
}

TEST_CASE("train-toy runs a few epochs with finite loss") {
  const RunResult res = run(
      "train-toy --epochs 3 --batch 64 --rho 0.05 --kind bcni --seed 4 --n 256 --lr 1e-4 "
      "--out cli_train.csv");
  CHECK(res.exit_code == 0);
  const std::string csv = slurp("cli_train.csv");
  CHECK(csv.find("\n0,") != std::string::npos);
  CHECK(csv.find("\n2,") != std::string::npos);
  CHECK(csv.find("nan") == std::string::npos);
  std::remove("cli_train.csv");
}

TEST_CASE("log level gates chatter and rejects unknown names") {
  const RunResult quiet = run("verify --suite closed-form --seed 7 --log-level quiet");
  CHECK(quiet.exit_code == 0);
  CHECK(quiet.output.find("[PASS]") == std::string::npos);
  const RunResult bad = run("verify --log-level silly");
  CHECK(bad.exit_code == 2);
}

TEST_CASE("invalid corruption kind is a usage error") {
  const RunResult res =
      run("train-toy --epochs 1 --batch 8 --rho 0 --kind sparkle --seed 1 --out x.csv");
  CHECK(res.exit_code == 2);
  CHECK(res.output.find("sparkle") != std::string::npos);
}
