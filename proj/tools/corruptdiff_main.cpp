// corruptdiff: structured conditioning corruption, a toy latent-diffusion
// simulator, and the numerical certificate suite for the rank-d scaling
// properties of subspace corruption.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "corruptdiff/corruption_config.hpp"
#include "corruptdiff/diffusion.hpp"
#include "corruptdiff/embed_corrupt.hpp"
#include "corruptdiff/embedding.hpp"
#include "corruptdiff/linalg.hpp"
#include "corruptdiff/token_corrupt.hpp"
#include "corruptdiff/verify.hpp"
#include "json.hpp"

namespace {

using corruptdiff::kRhoGrid;

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string csv_header_block(std::uint64_t seed) {
  std::string out;
  out += "# seed=" + std::to_string(seed) + "\n";
  out += "# version=" + std::string(corruptdiff::kVersion) + "\n";
  out += "# rho_grid=";
  for (std::size_t i = 0; i < kRhoGrid.size(); ++i) {
    if (i > 0) out += ",";
    out += fmt_double(kRhoGrid[i]);
  }
  out += "\n";
  return out;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << content;
  if (!os) throw std::runtime_error("write failed: " + path);
}

// Flags take precedence over the config file, which takes precedence over
// defaults. The config file is a flat JSON object keyed by long option names.
void apply_config_file(CLI::App* cmd, const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config file: " + path);
  nlohmann::json cfg;
  try {
    is >> cfg;
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("invalid JSON config: ") + e.what());
  }
  if (!cfg.is_object()) throw std::runtime_error("config must be a JSON object");
  for (const auto& [key, value] : cfg.items()) {
    CLI::Option* opt = cmd->get_option_no_throw("--" + key);
    if (opt == nullptr || opt->count() > 0) continue;  // unknown key, or flag given
    std::string text;
    if (value.is_string()) {
      text = value.get<std::string>();
    } else {
      text = value.dump();
    }
    opt->add_result(text);
    opt->run_callback();
  }
}

struct CommonArgs {
  std::uint64_t seed = 0;
  std::string config_path;
  std::string log_level = "info";

  bool info() const { return log_level != "quiet"; }
  bool debug() const { return log_level == "debug"; }
  void validate() const {
    if (log_level != "quiet" && log_level != "info" && log_level != "debug") {
      throw std::invalid_argument("unknown log level: " + log_level);
    }
  }
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--seed", args.seed, "64-bit RNG seed");
  cmd->add_option("--config", args.config_path, "JSON config file (flags override it)");
  cmd->add_option("--log-level", args.log_level, "quiet|info|debug");
}

// ---------------------------------------------------------------------------

int run_corrupt_embed(const CommonArgs& common, const std::string& kind_name, double rho,
                      const std::string& in_path, const std::string& out_path,
                      const std::string& prev_path, double hscan_lambda, double tani_eps) {
  common.validate();
  corruptdiff::CorruptionConfig config;
  config.kind = corruptdiff::corruption_kind_from_string(kind_name);
  config.rho = rho;
  config.hscan_lambda = hscan_lambda;
  config.tani_eps_stab = tani_eps;
  config.validate();

  const bool csv_input = in_path.size() > 4 && in_path.substr(in_path.size() - 4) == ".csv";
  std::vector<corruptdiff::Embedding> items =
      csv_input ? corruptdiff::read_embedding_csv(in_path) : corruptdiff::read_emb1(in_path);
  const corruptdiff::EmbeddingBatch batch(items);

  std::vector<corruptdiff::Embedding> prev;
  if (config.kind == corruptdiff::CorruptionKind::kTani) {
    if (prev_path.empty()) {
      std::cerr << "--prev is required for --kind tani\n";
      return kExitUsage;
    }
    prev = corruptdiff::read_emb1(prev_path);
    if (prev.size() != items.size() || !prev.front().same_shape(items.front())) {
      std::cerr << "--prev file must match the shape of --in\n";
      return kExitUsage;
    }
  }

  corruptdiff::RngStream root(common.seed);
  std::vector<corruptdiff::Embedding> out;
  out.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    corruptdiff::RngStream item_rng = root.substream(i);
    corruptdiff::CorruptionContext ctx;
    ctx.batch = &batch;
    if (!prev.empty()) ctx.prev = &prev[i];
    out.push_back(corruptdiff::corrupt(items[i], ctx, config, item_rng).corrupted);
  }
  corruptdiff::write_emb1(out_path, out);
  if (common.info())
    std::cout << "corrupted " << out.size() << " embeddings (" << kind_name << ", rho=" << rho
            << ") -> " << out_path << "\n";
  return kExitOk;
}

int run_corrupt_text(const CommonArgs& common, const std::string& op_name, double eta,
                     const std::string& in_path, const std::string& out_path) {
  common.validate();
  const corruptdiff::TokenOp op = corruptdiff::token_op_from_string(op_name);
  std::ifstream is(in_path);
  if (!is) throw std::runtime_error("cannot open: " + in_path);
  std::ofstream os(out_path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + out_path);

  corruptdiff::RngStream root(common.seed);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    corruptdiff::RngStream line_rng = root.substream(line_no);
    const corruptdiff::Prompt prompt = corruptdiff::Prompt::tokenize(line);
    os << corruptdiff::corrupt_prompt(prompt, op, eta, line_rng).join() << "\n";
    ++line_no;
  }
  if (common.info())
    std::cout << "corrupted " << line_no << " prompts (" << op_name << ", eta=" << eta << ") -> "
            << out_path << "\n";
  return kExitOk;
}

int run_simulate(const CommonArgs& common, std::size_t rank, std::size_t embed_dim,
                 std::size_t latent_dim, std::size_t steps, double rho, std::size_t n_pairs,
                 const std::string& out_path) {
  common.validate();
  corruptdiff::RngStream root(common.seed);
  corruptdiff::RngStream world_rng = root.substream(0);
  const corruptdiff::ToyWorld world =
      corruptdiff::make_toy_world(latent_dim, embed_dim, world_rng);
  const corruptdiff::NoiseSchedule schedule = corruptdiff::make_linear_schedule(steps, 1e-4, 2e-2);
  const corruptdiff::LinearDenoiser denoiser =
      corruptdiff::LinearDenoiser::bayes_optimal(world.w, schedule);

  corruptdiff::RngStream map_rng = root.substream(1);
  const corruptdiff::SubspaceMap map =
      corruptdiff::SubspaceMap::random_orthonormal(embed_dim, rank, map_rng);

  corruptdiff::EnsembleConfig config;
  config.latent_dim = latent_dim;
  config.embed_dim = embed_dim;
  config.rank = rank;
  config.steps = steps;
  config.rho = rho;
  config.n_pairs = n_pairs;

  corruptdiff::RngStream sub_rng = root.substream(2);
  const corruptdiff::EnsembleStats sub =
      corruptdiff::run_subspace_ensemble(config, denoiser, schedule, map, sub_rng);
  corruptdiff::RngStream iso_rng = root.substream(2);
  const corruptdiff::EnsembleStats iso =
      corruptdiff::run_isotropic_ensemble(config, denoiser, schedule, iso_rng);

  const std::vector<corruptdiff::EnergyStepCheck> checks =
      corruptdiff::energy_bound_check(sub, sub.k_sub, rank, rho, schedule, latent_dim);
  std::map<std::size_t, corruptdiff::EnergyStepCheck> by_step;
  for (const auto& c : checks) by_step[c.t] = c;

  std::string csv = csv_header_block(common.seed);
  csv += "t,mean_delta_sq_sub,mean_delta_sq_iso,bound_rhs,pass\n";
  bool all_pass = true;
  for (std::size_t t = 1; t <= steps; ++t) {
    const auto& check = by_step.at(t);
    // Row t reports the state after the reverse transition t -> t-1.
    const double inv_alpha = 1.0 / schedule.alpha(t);
    const double rhs = inv_alpha * (sub.mean_delta_sq[t] +
                                    schedule.beta_coef(t) * schedule.beta_coef(t) * rho * rho *
                                        sub.k_sub * sub.k_sub * static_cast<double>(rank)) +
                       schedule.sigma_sq(t) * static_cast<double>(latent_dim);
    csv += std::to_string(t) + "," + fmt_double(sub.mean_delta_sq[t - 1]) + "," +
           fmt_double(iso.mean_delta_sq[t - 1]) + "," + fmt_double(rhs) + "," +
           (check.passed ? "true" : "false") + "\n";
    all_pass = all_pass && check.passed;
  }
  write_file(out_path, csv);

  const corruptdiff::GapEstimate gap = corruptdiff::cumulative_gap(sub, iso);
  if (common.info()) {
    std::cout << "terminal gap (subspace - isotropic): " << gap.gap << " +- " << gap.se << "\n";
    std::cout << "per-step energy bound: " << (all_pass ? "all pass" : "violations found")
              << "\n";
  }
  return all_pass ? kExitOk : kExitCheckFailed;
}

int run_verify(const CommonArgs& common, const std::string& suite_name,
               const std::string& out_json, const std::string& out_csv, double bound_scale) {
  common.validate();
  corruptdiff::VerifyConfig config;
  config.seed = common.seed;
  config.suite = corruptdiff::suite_from_string(suite_name);
  config.bound_scale = bound_scale;

  const std::vector<corruptdiff::VerificationRecord> records = corruptdiff::run_all(config);
  const corruptdiff::ReportHeader header = corruptdiff::ReportHeader::for_config(config);
  if (!out_json.empty()) write_file(out_json, corruptdiff::report_to_json(header, records));
  if (!out_csv.empty()) write_file(out_csv, corruptdiff::report_to_csv(header, records));

  bool all_pass = true;
  for (const auto& r : records) {
    if (common.info()) {
      std::cout << (r.passed ? "[PASS] " : "[FAIL] ") << r.check_id << " (" << r.paper_anchor
                << ") margin=" << r.margin << " n=" << r.n_samples << "\n";
    }
    if (common.debug()) std::cerr << "# " << r.check_id << " took " << r.wall_time << " s\n";
    all_pass = all_pass && r.passed;
  }
  if (common.info()) {
    std::cout << (all_pass ? "verification suite passed" : "verification suite FAILED") << "\n";
  }
  return all_pass ? kExitOk : kExitCheckFailed;
}

int run_train_toy(const CommonArgs& common, std::size_t epochs, std::size_t batch, double rho,
                  const std::string& kind_name, double lr, std::size_t n_samples,
                  std::size_t latent_dim, std::size_t embed_dim, std::size_t steps,
                  const std::string& out_path) {
  common.validate();
  corruptdiff::CorruptionConfig config;
  config.kind = corruptdiff::corruption_kind_from_string(kind_name);
  config.rho = rho;
  config.validate();

  corruptdiff::RngStream root(common.seed);
  corruptdiff::RngStream world_rng = root.substream(0);
  const corruptdiff::ToyWorld world =
      corruptdiff::make_toy_world(latent_dim, embed_dim, world_rng);
  const corruptdiff::NoiseSchedule schedule = corruptdiff::make_linear_schedule(steps, 0.05, 0.3);
  corruptdiff::RngStream data_rng = root.substream(1);
  const std::vector<corruptdiff::TrainSample> dataset =
      corruptdiff::make_dataset(world, n_samples, data_rng);
  corruptdiff::LinearDenoiser denoiser =
      corruptdiff::LinearDenoiser::zero(latent_dim, embed_dim, steps);

  std::string csv = csv_header_block(common.seed);
  csv += "epoch,mean_loss\n";
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    corruptdiff::RngStream epoch_rng = root.substream(100 + epoch);
    const double loss =
        corruptdiff::train_epoch(dataset, config, denoiser, schedule, lr, batch, epoch_rng);
    csv += std::to_string(epoch) + "," + fmt_double(loss) + "\n";
    if (!std::isfinite(loss)) {
      write_file(out_path, csv);
      std::cerr << "loss diverged at epoch " << epoch << "\n";
      return kExitCheckFailed;
    }
  }
  write_file(out_path, csv);
  if (common.info())
    std::cout << "trained " << epochs << " epochs (" << kind_name << ", rho=" << rho << ") -> "
            << out_path << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"structured conditioning corruption + toy diffusion certificates"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  // corrupt {embed, text}
  CLI::App* corrupt_cmd = app.add_subcommand("corrupt", "apply a corruption operator");
  corrupt_cmd->require_subcommand(1);

  CLI::App* embed_cmd = corrupt_cmd->add_subcommand("embed", "corrupt embedding files");
  CommonArgs embed_common;
  std::string embed_kind, embed_in, embed_out, embed_prev;
  double embed_rho = 0.0, embed_hscan_lambda = 0.1, embed_tani_eps = 1e-8;
  add_common(embed_cmd, embed_common);
  embed_cmd->add_option("--kind", embed_kind, "bcni|sacn|gn|un|tani|hscan")->required();
  embed_cmd->add_option("--rho", embed_rho, "corruption scale in [0,1]")->required();
  embed_cmd->add_option("--in", embed_in, "input EMB1 (or .csv) file")->required();
  embed_cmd->add_option("--out", embed_out, "output EMB1 file")->required();
  embed_cmd->add_option("--prev", embed_prev, "previous-step embeddings (tani only)");
  embed_cmd->add_option("--hscan-lambda", embed_hscan_lambda, "residual isotropic weight");
  embed_cmd->add_option("--tani-eps", embed_tani_eps, "stabilizer for the motion direction");

  CLI::App* text_cmd = corrupt_cmd->add_subcommand("text", "corrupt prompt files");
  CommonArgs text_common;
  std::string text_op, text_in, text_out;
  double text_eta = 0.0;
  add_common(text_cmd, text_common);
  text_cmd->add_option("--op", text_op, "swap|replace|add|remove|perturb")->required();
  text_cmd->add_option("--eta", text_eta, "noise ratio in [0,1]")->required();
  text_cmd->add_option("--in", text_in, "input text file, one prompt per line")->required();
  text_cmd->add_option("--out", text_out, "output text file")->required();

  // simulate
  CLI::App* sim_cmd = app.add_subcommand("simulate", "paired clean/corrupted trajectories");
  CommonArgs sim_common;
  std::size_t sim_rank = 2, sim_embed = 32, sim_latent = 16, sim_steps = 50, sim_pairs = 10000;
  double sim_rho = 0.1;
  std::string sim_out;
  add_common(sim_cmd, sim_common);
  sim_cmd->add_option("--d", sim_rank, "corrupted subspace dimension");
  sim_cmd->add_option("--D", sim_embed, "embedding dimension");
  sim_cmd->add_option("--m", sim_latent, "latent dimension");
  sim_cmd->add_option("--T", sim_steps, "reverse steps");
  sim_cmd->add_option("--rho", sim_rho, "corruption scale");
  sim_cmd->add_option("--n", sim_pairs, "ensemble size");
  sim_cmd->add_option("--out", sim_out, "per-step CSV output")->required();

  // verify
  CLI::App* verify_cmd = app.add_subcommand("verify", "run the certificate suite");
  CommonArgs verify_common;
  verify_common.seed = 7;
  std::string verify_suite = "all", verify_json, verify_csv;
  double verify_bound_scale = 1.0;
  add_common(verify_cmd, verify_common);
  verify_cmd->add_option("--suite", verify_suite, "all|closed-form|monte-carlo");
  verify_cmd->add_option("--out-json", verify_json, "JSON report path");
  verify_cmd->add_option("--out-csv", verify_csv, "CSV report path");
  verify_cmd->add_option("--bound-scale", verify_bound_scale)->group("");  // mutation-test hook

  // train-toy
  CLI::App* train_cmd = app.add_subcommand("train-toy", "corruption-aware toy training loop");
  CommonArgs train_common;
  std::size_t train_epochs = 0, train_batch = 64, train_n = 4096, train_latent = 4,
              train_embed = 6, train_steps = 4;
  double train_rho = 0.0, train_lr = 1e-4;
  std::string train_kind = "bcni", train_out = "train_loss.csv";
  add_common(train_cmd, train_common);
  train_cmd->add_option("--epochs", train_epochs, "training epochs")->required();
  train_cmd->add_option("--batch", train_batch, "mini-batch size")->required();
  train_cmd->add_option("--rho", train_rho, "corruption scale")->required();
  train_cmd->add_option("--kind", train_kind, "corruption kind")->required();
  train_cmd->add_option("--lr", train_lr, "learning rate on the summed batch gradient");
  train_cmd->add_option("--n", train_n, "dataset size");
  train_cmd->add_option("--m", train_latent, "latent dimension");
  train_cmd->add_option("--D", train_embed, "embedding dimension");
  train_cmd->add_option("--T", train_steps, "schedule steps");
  train_cmd->add_option("--out", train_out, "per-epoch loss CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (embed_cmd->parsed()) {
      if (!embed_common.config_path.empty()) apply_config_file(embed_cmd, embed_common.config_path);
      return run_corrupt_embed(embed_common, embed_kind, embed_rho, embed_in, embed_out,
                               embed_prev, embed_hscan_lambda, embed_tani_eps);
    }
    if (text_cmd->parsed()) {
      if (!text_common.config_path.empty()) apply_config_file(text_cmd, text_common.config_path);
      return run_corrupt_text(text_common, text_op, text_eta, text_in, text_out);
    }
    if (sim_cmd->parsed()) {
      if (!sim_common.config_path.empty()) apply_config_file(sim_cmd, sim_common.config_path);
      return run_simulate(sim_common, sim_rank, sim_embed, sim_latent, sim_steps, sim_rho,
                          sim_pairs, sim_out);
    }
    if (verify_cmd->parsed()) {
      if (!verify_common.config_path.empty())
        apply_config_file(verify_cmd, verify_common.config_path);
      return run_verify(verify_common, verify_suite, verify_json, verify_csv, verify_bound_scale);
    }
    if (train_cmd->parsed()) {
      if (!train_common.config_path.empty()) apply_config_file(train_cmd, train_common.config_path);
      return run_train_toy(train_common, train_epochs, train_batch, train_rho, train_kind,
                           train_lr, train_n, train_latent, train_embed, train_steps, train_out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
