#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "hamlearn/error.hpp"
#include "hamlearn/experiment.hpp"

namespace ex = hamlearn::experiment;

namespace {

struct CommonOptions {
  std::string config;
  std::string profile;
  std::string seed;
  std::string out;
  std::string jobs;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "key = value configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--profile", o.profile, "paper or desk")->check(CLI::IsMember({"paper", "desk"}));
  cmd->add_option("--seed", o.seed, "master seed (unsigned 64-bit)");
  cmd->add_option("--out", o.out, "run directory");
  cmd->add_option("--jobs", o.jobs, "worker threads, 0 for all cores");
  cmd->add_option("--set", o.sets, "override a configuration key, key=value (repeatable)");
}

ex::ExperimentConfig resolve(const CommonOptions& o) {
  std::vector<std::pair<std::string, std::string>> overrides;
  for (const auto& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw hamlearn::ContractError("--set expects key=value, got '" + s + "'");
    overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  if (!o.profile.empty()) overrides.emplace_back("profile", o.profile);
  if (!o.seed.empty()) overrides.emplace_back("seed", o.seed);
  if (!o.out.empty()) overrides.emplace_back("out", o.out);
  if (!o.jobs.empty()) overrides.emplace_back("jobs", o.jobs);
  std::optional<std::filesystem::path> file;
  if (!o.config.empty()) file = o.config;
  return ex::resolve_config(file, overrides);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parameter-cognizant Hamiltonian neural networks"};
  app.require_subcommand(1);

  CommonOptions gen_opts, train_opts, analyze_opts, sweep_opts, config_opts;
  std::string mode = "potential";
  std::string source = "true";

  auto* gen = app.add_subcommand("generate", "integrate training orbits");
  add_common(gen, gen_opts);
  auto* train = app.add_subcommand("train", "train the network ensemble");
  add_common(train, train_opts);
  auto* analyze = app.add_subcommand("analyze", "potential, Taylor, Poincare or orbit reports");
  add_common(analyze, analyze_opts);
  analyze->add_option("--mode", mode, "potential|taylor|poincare|orbit")
      ->check(CLI::IsMember({"potential", "taylor", "poincare", "orbit"}));
  auto* sweep = app.add_subcommand("sweep", "chaos fraction versus alpha");
  add_common(sweep, sweep_opts);
  sweep->add_option("--source", source, "true or learned")->check(CLI::IsMember({"true", "learned"}));
  auto* show = app.add_subcommand("config", "print the resolved configuration");
  add_common(show, config_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    nlohmann::json summary;
    if (gen->parsed()) {
      summary = ex::cmd_generate(resolve(gen_opts));
      summary.erase("members");
    } else if (train->parsed()) {
      summary = ex::cmd_train(resolve(train_opts));
    } else if (analyze->parsed()) {
      summary = ex::cmd_analyze(resolve(analyze_opts), ex::parse_analyze_mode(mode));
    } else if (sweep->parsed()) {
      summary = ex::cmd_sweep(resolve(sweep_opts), ex::parse_sweep_source(source));
    } else {
      std::cout << resolve(config_opts).to_text();
      return 0;
    }
    std::cout << summary.dump(2) << "\n";
  } catch (const hamlearn::ContractError& e) {
    std::cerr << "hamlearn: invalid input: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "hamlearn: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
