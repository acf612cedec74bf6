// Experiment runner: `run` trains one optimizer (or all of them) and writes
// trace/summary/checkpoint artifacts, `race` compares optimizers on a shared
// split, `plcheck` audits the PL inequality on the synthetic testbed, and
// `datagen` materializes synthetic splits as LIBSVM files.

#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aucpd/config.hpp"
#include "aucpd/errors.hpp"
#include "aucpd/experiment.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string seed, optimizer, out, mode;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "config file (TOML-style tables)");
  cmd->add_option("--seed", f.seed, "master seed (overrides run.seed)");
  cmd->add_option("--optimizer", f.optimizer, "optimizer name or 'all' (overrides optimizer.name)");
  cmd->add_option("--out", f.out, "output directory (overrides run.out)");
  cmd->add_option("--mode", f.mode, "theoretical|practical (overrides optimizer.mode)");
  cmd->add_option("--set", f.overrides, "extra overrides, section.key=value");
}

aucpd::ExperimentConfig build_config(const CommonFlags& f) {
  aucpd::ExperimentConfig cfg;
  if (!f.config_path.empty()) cfg = aucpd::parse_config_file(f.config_path);
  for (const auto& kv : f.overrides) aucpd::apply_override(cfg, kv);
  // dedicated flags win over both the file and --set
  if (!f.seed.empty()) aucpd::apply_override(cfg, "run.seed=" + f.seed);
  if (!f.optimizer.empty()) aucpd::apply_override(cfg, "optimizer.name=" + f.optimizer);
  if (!f.out.empty()) aucpd::apply_override(cfg, "run.out=" + f.out);
  if (!f.mode.empty()) aucpd::apply_override(cfg, "optimizer.mode=" + f.mode);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stochastic min-max AUC optimization experiments"};
  app.require_subcommand(1);

  CommonFlags run_flags, race_flags, pl_flags, gen_flags;
  CLI::App* run_cmd = app.add_subcommand("run", "train one optimizer (or all) and write traces");
  add_common(run_cmd, run_flags);
  CLI::App* race_cmd = app.add_subcommand("race", "compare optimizers on identical data");
  add_common(race_cmd, race_flags);
  CLI::App* pl_cmd = app.add_subcommand("plcheck", "audit the PL inequality numerically");
  add_common(pl_cmd, pl_flags);
  CLI::App* gen_cmd = app.add_subcommand("datagen", "write synthetic splits as LIBSVM files");
  add_common(gen_cmd, gen_flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      aucpd::run_experiment(build_config(run_flags));
    } else if (race_cmd->parsed()) {
      const auto j = aucpd::race_experiment(build_config(race_flags));
      std::cout << j.dump(2) << std::endl;
    } else if (pl_cmd->parsed()) {
      const auto j = aucpd::plcheck_experiment(build_config(pl_flags));
      std::cout << j.dump(2) << std::endl;
    } else if (gen_cmd->parsed()) {
      aucpd::datagen_experiment(build_config(gen_flags));
    }
  } catch (const aucpd::ConfigError& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return 2;
  } catch (const aucpd::ParseError& e) {
    std::cerr << "parse error: " << e.what() << std::endl;
    return 2;
  } catch (const aucpd::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << std::endl;
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}
