// Command-line front end for the experiment harness.

#include <CLI11.hpp>
#include <cstdint>
#include <iostream>
#include <string>

#include "dais/harness.hpp"

namespace {

void add_common_flags(CLI::App* sub, dais::ExperimentConfig& cfg, std::string& config_path,
                      std::uint64_t& seed, bool& seed_set) {
  sub->add_option("--config", config_path, "configuration file (key = value lines)");
  sub->add_option("--seed", seed, "base seed; cells use {seed, seed+1, seed+2}")
      ->each([&](const std::string&) { seed_set = true; });
  sub->add_option("--out", cfg.out_dir, "output directory");
  sub->add_flag("--paper-scale", cfg.paper_scale, "restore the full published budgets");
  sub->add_option("--threads", cfg.threads, "worker threads for grid cells");
  sub->add_option("--tau", cfg.tau, "mode-classification threshold");
  sub->add_option("--data", cfg.data_dir, "dataset directory");
  sub->add_option("--iters", cfg.iters, "override training iterations");
  sub->add_option("--lr", cfg.lr, "override learning rate");
  sub->add_option("--dais-lr", cfg.dais_lr, "override the annealed bound's learning rate");
  sub->add_option("--average-tail", cfg.average_tail, "Polyak tail fraction (0 reports the final iterate)");
  sub->add_option("--methods", cfg.methods, "methods to run")->delimiter(',');
  sub->add_option("--n", cfg.n_list, "particle counts")->delimiter(',');
  sub->add_option("--k", cfg.k_list, "transition counts")->delimiter(',');
  sub->add_option("--d", cfg.d_list, "dimensions")->delimiter(',');
}

int run(const std::string& experiment, dais::ExperimentConfig cfg, const std::string& config_path,
        std::uint64_t seed, bool seed_set) {
  try {
    if (!config_path.empty()) dais::apply_config_file(cfg, config_path);
    cfg.experiment = experiment;
    if (seed_set) cfg.seeds = {seed, seed + 1, seed + 2};
    const auto art = dais::run_experiment(cfg);
    std::cout << "wrote " << art.metrics_path << "\n";
    std::cout << "wrote " << art.summary_path << "\n";
    for (const auto& p : art.extra_paths) std::cout << "wrote " << p << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"annealed importance sampling bounds, experiments and limit checks"};
  app.require_subcommand(1);

  struct SubState {
    dais::ExperimentConfig cfg;
    std::string config_path;
    std::uint64_t seed = 1;
    bool seed_set = false;
  };
  const std::vector<std::string> names = {"theory", "bimodal", "gp", "logreg", "moments"};
  const std::vector<std::string> descriptions = {
      "closed-form annealing-gap limit tables and the N-particle inequality",
      "bimodal mixture study: mode-seeking vs mass-covering fits",
      "Gaussian process regression vs the analytic posterior",
      "Bayesian logistic regression vs HMC ground truth",
      "moment-estimation error vs number of chain samples",
  };
  std::vector<SubState> states(names.size());
  for (std::size_t i = 0; i < names.size(); ++i) {
    CLI::App* sub = app.add_subcommand(names[i], descriptions[i]);
    add_common_flags(sub, states[i].cfg, states[i].config_path, states[i].seed, states[i].seed_set);
  }

  CLI11_PARSE(app, argc, argv);
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (app.get_subcommand(names[i])->parsed())
      return run(names[i], states[i].cfg, states[i].config_path, states[i].seed, states[i].seed_set);
  }
  return 1;
}
