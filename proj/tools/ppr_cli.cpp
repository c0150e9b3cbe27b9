#include <CLI11.hpp>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>

#include "ppr/commands.hpp"
#include "ppr/errors.hpp"

namespace {

using Command = std::function<void(const ppr::ExperimentConfig&, const std::filesystem::path&)>;

struct Options {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::string algo;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parallel-in-time Hamiltonian simulation toolkit"};
  app.require_subcommand(1);
  Options opt;

  auto add = [&](const char* name, const char* help, Command cmd) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("config", opt.config, "JSON config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out, "output directory")->capture_default_str();
    sub->add_option("--seed", opt.seed, "override the config seed");
    sub->add_option("--workers", opt.workers, "worker threads");
    return std::make_pair(sub, std::move(cmd));
  };

  std::vector<std::pair<CLI::App*, Command>> commands;
  commands.push_back(add("sim", "sequential simulation", ppr::cmd_simulate));
  commands.push_back(add("parareal", "plain or Procrustes parareal run", ppr::cmd_parareal));
  commands.push_back(add("sample", "generate training inputs (HMC-H0 or TrajEnsemble-H0)", ppr::cmd_sample));
  commands.back().first->add_option("--algo", opt.algo, "hmc | trajensemble")->check(CLI::IsMember({"hmc", "trajensemble"}));
  commands.push_back(add("train", "train a ResNet surrogate", ppr::cmd_train));
  commands.push_back(add("eval-nn", "roll out a trained network", ppr::cmd_eval_nn));
  commands.push_back(add("bench", "one-step accuracy and runtime table", ppr::cmd_bench));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    ppr::ExperimentConfig cfg = ppr::ExperimentConfig::load(opt.config);
    cfg.seed_override = opt.seed;
    if (opt.workers) cfg.workers = *opt.workers == 0 ? 1 : *opt.workers;
    if (!opt.algo.empty()) {
      if (!cfg.doc.contains("sampler")) throw ppr::ConfigError("--algo given but the config has no sampler section");
      cfg.doc["sampler"]["algo"] = opt.algo;
    }
    const std::filesystem::path out(opt.out);
    std::filesystem::create_directories(out);
    for (auto& [sub, cmd] : commands) {
      if (sub->parsed()) {
        cmd(cfg, out);
        std::cout << "wrote " << out.string() << "\n";
      }
    }
    return 0;
  } catch (const ppr::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ppr::DimensionError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ppr::UnsupportedTransformError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
}
