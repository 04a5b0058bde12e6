#include <CLI11.hpp>
#include <iostream>
#include <string>
#include <vector>

#include "koopcast/harness.hpp"

using namespace koopcast;

namespace {

// mirrors the config-file keys so every setting has a flag override
void add_config_flags(CLI::App* cmd, BenchmarkConfig& cfg) {
  cmd->add_option("--data", cfg.data, "data source, 'csv:<path>' or 'synth:<kind>'");
  cmd->add_option("--synth-length", cfg.synth_length);
  cmd->add_option("--synth-channels", cfg.synth_channels);
  cmd->add_option("--synth-seed", cfg.synth_seed);
  cmd->add_option("--synth-noise", cfg.synth_noise);
  cmd->add_option("-P,--input-len", cfg.input_lens, "input window length(s)");
  cmd->add_option("-H,--horizon", cfg.horizons, "forecast horizon(s)");
  cmd->add_option("--variants", cfg.variants, "model variant names");
  cmd->add_option("--steps", cfg.steps);
  cmd->add_option("--batch-size", cfg.batch_size);
  cmd->add_option("--lr", cfg.lr);
  cmd->add_option("--lambda-lyap", cfg.lambda_lyap);
  cmd->add_option("--rho-max", cfg.rho_max);
  cmd->add_option("--rho-min", cfg.rho_min);
  cmd->add_option("--d-model", cfg.d_model);
  cmd->add_option("--n-patches", cfg.n_patches);
  cmd->add_option("--use-attention", cfg.use_attention);
  cmd->add_option("--rank", cfg.rank);
  cmd->add_option("--mlp-hidden", cfg.mlp_hidden);
  cmd->add_option("--ssm-hidden", cfg.ssm_hidden);
  cmd->add_option("--ssm-diagonal", cfg.ssm_diagonal);
  cmd->add_option("--train-ratio", cfg.train_ratio);
  cmd->add_option("--eval-every", cfg.eval_every);
  cmd->add_option("--spectral-log-every", cfg.spectral_log_every);
  cmd->add_option("--seed", cfg.seed);
  cmd->add_option("--out-dir", cfg.out_dir);
  cmd->add_option("--workers", cfg.workers,
                  "thread count (env KOOPCAST_WORKERS overrides)");
}

// The config file is loaded before CLI11 parses, so explicit flags override
// file values; the file itself must be located with a pre-scan.
std::string find_config_arg(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if ((a == "-c" || a == "--config") && i + 1 < argc) return argv[i + 1];
    if (a.rfind("--config=", 0) == 0) return a.substr(9);
  }
  return "";
}

}  // namespace

int main(int argc, char** argv) {
  BenchmarkConfig cfg;
  std::string config_path = find_config_arg(argc, argv);
  try {
    if (!config_path.empty()) cfg = parse_config(config_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  CLI::App app{"learnable spectrally-constrained linear propagators for forecasting"};
  app.require_subcommand(1);
  std::string config_echo;  // consumed by the pre-scan; registered so CLI11 accepts it

  CLI::App* bench = app.add_subcommand("bench", "train the full (variant, P, H) grid");
  bench->add_option("-c,--config", config_echo, "key = value config file");
  add_config_flags(bench, cfg);

  CLI::App* train_cmd = app.add_subcommand("train", "train a single variant");
  std::string train_variant;
  train_cmd->add_option("variant", train_variant, "variant name")->required();
  train_cmd->add_option("-c,--config", config_echo, "key = value config file");
  add_config_flags(train_cmd, cfg);

  CLI::App* check = app.add_subcommand("check", "run the fast invariant suite");

  CLI::App* synth = app.add_subcommand("synth", "write a synthetic series to CSV");
  std::string synth_kind;
  std::string synth_out = "series.csv";
  std::size_t synth_t = 4096, synth_d = 4;
  uint64_t synth_seed = 0;
  double synth_noise = -1.0;
  synth->add_option("kind", synth_kind, "damped_rotation | sinusoid_ar | random_walk")
      ->required();
  synth->add_option("-o,--out", synth_out, "output CSV path");
  synth->add_option("-T,--length", synth_t);
  synth->add_option("-d,--channels", synth_d);
  synth->add_option("--seed", synth_seed);
  synth->add_option("--noise", synth_noise, "negative selects the kind's default");

  CLI11_PARSE(app, argc, argv);

  try {
    if (check->parsed()) return run_self_checks(std::cout) ? 0 : 1;

    if (synth->parsed()) {
      const Series s = synthesize_series(synth_kind_from_name(synth_kind), synth_t,
                                         synth_d, synth_seed, synth_noise);
      save_csv(synth_out, s);
      std::cout << "wrote " << s.length << " x " << s.channels << " series to "
                << synth_out << "\n";
      return 0;
    }

    if (train_cmd->parsed()) cfg.variants = {train_variant};
    (void)bench;
    apply_worker_env(cfg);

    const BenchmarkResult result = run_benchmark(cfg);
    std::cout << result.summary_text;
    std::cout << "artifacts written to " << cfg.out_dir << "\n";
    return result.any_failed ? 1 : 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
