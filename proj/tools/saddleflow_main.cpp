#include <exception>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "saddleflow/saddleflow.hpp"

namespace {

std::vector<double> parse_rho_list(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) values.push_back(std::stod(item));
  }
  if (values.empty()) throw saddleflow::ConfigError("--rho: expected a comma-separated list");
  return values;
}

void print_summary(const saddleflow::RunConfig& cfg) {
  std::cout << "problem: n=" << cfg.problem.n() << " m=" << cfg.problem.m()
            << " rho_values=" << cfg.rho_values.size()
            << " initial_states=" << cfg.initial_states.size()
            << " sampled=" << cfg.sampling.count << "\n"
            << "integrator: h=" << cfg.integrator.step_size << " T=" << cfg.integrator.horizon
            << " stride=" << cfg.integrator.record_stride << "\n"
            << "output: " << cfg.output_dir << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Projected saddle-flow solver and diagnostics"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_dir;
  std::string rho_list;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;

  CLI::App* cmd_run = app.add_subcommand("run", "Execute a config: integrations + diagnostics");
  cmd_run->add_option("config", config_path, "Run-config JSON file")->required();
  cmd_run->add_option("--output-dir", output_dir, "Override the output directory");

  CLI::App* cmd_check = app.add_subcommand("check", "Validate a config without running");
  cmd_check->add_option("config", config_path, "Run-config JSON file")->required();

  CLI::App* cmd_sweep =
      app.add_subcommand("sweep", "Run with overridden rho values and sampled initial states");
  cmd_sweep->add_option("config", config_path, "Run-config JSON file")->required();
  cmd_sweep->add_option("--rho", rho_list, "Comma-separated augmentation values");
  cmd_sweep->add_option("--samples", samples, "Number of sampled initial states");
  cmd_sweep->add_option("--seed", seed, "Seed for sampling and randomized checks")
      ->each([&](const std::string&) { seed_set = true; });
  cmd_sweep->add_option("--output-dir", output_dir, "Override the output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    saddleflow::RunConfig cfg = saddleflow::load_run_config(config_path);

    if (cmd_check->parsed()) {
      print_summary(cfg);
      std::cout << "ok\n";
      return 0;
    }
    if (cmd_sweep->parsed()) {
      if (!rho_list.empty()) cfg.rho_values = parse_rho_list(rho_list);
      if (samples > 0) cfg.sampling.count = samples;
      if (seed_set) cfg.seed = seed;
    }
    if (!output_dir.empty()) cfg.output_dir = output_dir;
    cfg.validate();
    print_summary(cfg);
    return saddleflow::run(cfg);
  } catch (const saddleflow::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
