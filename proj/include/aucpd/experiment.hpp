#pragma once

#include <filesystem>
#include <fstream>
#include <future>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "aucpd/config.hpp"
#include "aucpd/data.hpp"
#include "aucpd/errors.hpp"
#include "aucpd/eval.hpp"
#include "aucpd/model.hpp"
#include "aucpd/objective.hpp"
#include "aucpd/optimizers.hpp"
#include "aucpd/plcheck.hpp"
#include "aucpd/schedule.hpp"

namespace aucpd {

// Artifacts land under their final name only once fully written.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    out << content;
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

struct SplitData {
  Dataset train;
  Dataset test;
};

// Deterministic data preparation from the config: synthetic two-Gaussian
// draws or file ingestion, with the training split imbalanced in place and
// the test split untouched.
inline SplitData prepare_data(const ExperimentConfig& cfg, Rng& rng) {
  SplitData out;
  if (cfg.data_source == "synthetic") {
    const std::size_t d = static_cast<std::size_t>(cfg.dim);
    Vec mean_pos(d, 0.0), mean_neg(d, 0.0);
    const double shift = cfg.separation / (2.0 * std::sqrt(static_cast<double>(d)));
    for (std::size_t i = 0; i < d; ++i) {
      mean_pos[i] = shift;
      mean_neg[i] = -shift;
    }
    out.train = gen_two_gaussians(cfg.n_train, d, mean_pos, mean_neg, cfg.scale, cfg.p, rng);
    out.test = gen_two_gaussians(cfg.n_test, d, mean_pos, mean_neg, cfg.scale, cfg.p, rng);
  } else {
    Dataset full = cfg.data_source == "libsvm"
                       ? read_libsvm(cfg.data_path)
                       : read_csv(cfg.data_path, static_cast<std::size_t>(cfg.label_column));
    if (!cfg.data_test_path.empty()) {
      out.train = std::move(full);
      out.test = cfg.data_source == "libsvm"
                     ? read_libsvm(cfg.data_test_path)
                     : read_csv(cfg.data_test_path, static_cast<std::size_t>(cfg.label_column));
    } else {
      detail::shuffle_examples(full.examples, rng);
      const std::size_t n_train =
          static_cast<std::size_t>(cfg.train_frac * static_cast<double>(full.size()));
      out.train.dim = out.test.dim = full.dim;
      out.train.num_classes = out.test.num_classes = full.num_classes;
      for (std::size_t i = 0; i < full.size(); ++i)
        (i < n_train ? out.train : out.test).examples.push_back(std::move(full.examples[i]));
    }
  }
  if (cfg.drop_frac > 0.0) out.train = make_imbalanced(out.train, cfg.drop_frac, rng);
  return out;
}

inline ModelArch arch_from_config(const ExperimentConfig& cfg, std::size_t input_dim) {
  ModelArch arch;
  arch.kind = model_kind_from_string(cfg.model_kind);
  arch.input_dim = input_dim;
  arch.hidden = static_cast<std::size_t>(cfg.hidden);
  arch.c1 = cfg.c1;
  arch.c2 = cfg.c2;
  return arch;
}

inline const std::vector<std::string>& all_optimizer_names() {
  static const std::vector<std::string> names = {"ppd_sg", "ppd_adagrad", "pga", "oauc",
                                                 "ce_sgd"};
  return names;
}

namespace detail {

inline ScheduleParams schedule_from_config(const ExperimentConfig& cfg, const Model& init,
                                           const SplitData& data,
                                           std::vector<std::string>* notes) {
  ScheduleParams sp;
  sp.mode = schedule_mode_from_string(cfg.mode);
  sp.eta0 = cfg.eta0;
  sp.T0 = cfg.T0;
  sp.m0 = cfg.m0;
  sp.K = static_cast<int>(cfg.K);
  sp.gamma = cfg.gamma;
  sp.mu = cfg.mu;
  sp.L = cfg.L;
  sp.L_tilde = cfg.L_tilde;
  sp.G = cfg.G;
  sp.sigma2 = cfg.sigma2;
  sp.delta = cfg.delta;
  sp.dim_w = init.w.size();
  const std::size_t n_pos = data.train.count_label(+1);
  sp.p = static_cast<double>(n_pos) / static_cast<double>(data.train.size());
  if (sp.mode == ScheduleMode::theoretical) {
    // mu and L have no estimator and must come from the user; the remaining
    // constants fall back to empirical estimates over the training split.
    if (!(sp.L_tilde > 0.0)) {
      sp.L_tilde = lipschitz_estimate(init, data.train);
      if (notes) notes->push_back("L_tilde estimated empirically");
    }
    if (!(sp.sigma2 > 0.0)) {
      sp.sigma2 = std::max(1e-8, estimate_sigma2(init, data.train));
      if (notes) notes->push_back("sigma2 estimated empirically");
    }
    if (!(sp.G > 0.0)) {
      PrimalDualState s0{init.w, 0.0, 0.0, 0.0};
      sp.G = estimate_grad_bound(init.arch, s0, ClassPrior::known(sp.p), data.train);
      if (notes) notes->push_back("G estimated empirically");
    }
  }
  return sp;
}

inline RunConfig run_config_from(const ExperimentConfig& cfg, const ScheduleParams& sp,
                                 const SplitData& data) {
  RunConfig rc;
  rc.sched = sp;
  rc.batch = static_cast<int>(cfg.batch);
  rc.eval_every = cfg.eval_every;
  rc.train_eval = &data.train;
  rc.test_eval = &data.test;
  rc.wall_timing = cfg.timing == "wall";
  rc.streaming_prior = cfg.prior == "streaming";
  rc.prior_p = rc.streaming_prior ? 0.5 : sp.p;
  rc.R1 = cfg.R1;
  rc.R2 = cfg.R2;
  rc.total_steps = cfg.total_steps;
  rc.decay_steps = cfg.decay_steps;
  rc.adagrad_T_max = cfg.adagrad_T_max;
  return rc;
}

}  // namespace detail

struct OptimizerOutcome {
  std::string name;
  Model model;
  RunTrace trace;
  double train_auc = 0.0;
  double test_auc = 0.0;
  double pairwise_loss = 0.0;
};

// Runs one named optimizer on prepared data. The stream and internal rng are
// derived from the master seed the same way for every contender, so races see
// identical sample sequences.
inline OptimizerOutcome run_optimizer(const std::string& name, const ExperimentConfig& cfg,
                                      const SplitData& data, const Model& init) {
  std::vector<std::string> notes;
  const ScheduleParams sp = detail::schedule_from_config(cfg, init, data, &notes);
  RunConfig rc = detail::run_config_from(cfg, sp, data);
  Rng master(cfg.seed);
  ExampleStream stream = ExampleStream::from_dataset(&data.train, master.split(1));
  Rng inner = master.split(2);

  OptimizerOutcome out;
  out.name = name;
  const SaddleOracle oracle = make_auc_oracle(init.arch);
  if (name == "ppd_sg") {
    auto r = ppd_sg_run(init, oracle, stream, rc, inner);
    out.model = Model{init.arch, r.state.w};
    out.trace = std::move(r.trace);
  } else if (name == "ppd_adagrad") {
    auto r = ppd_adagrad_run(init, oracle, stream, rc, inner);
    out.model = Model{init.arch, r.state.w};
    out.trace = std::move(r.trace);
  } else if (name == "pga") {
    auto r = pga_run(init, oracle, stream, rc, inner);
    out.model = Model{init.arch, r.state.w};
    out.trace = std::move(r.trace);
  } else if (name == "oauc") {
    auto r = oauc_run(init, oracle, stream, rc, inner);
    out.model = Model{init.arch, r.state.w};
    out.trace = std::move(r.trace);
  } else if (name == "ce_sgd") {
    auto r = ce_sgd_run(init, stream, rc, inner);
    out.model = std::move(r.model);
    out.trace = std::move(r.trace);
  } else {
    throw ConfigError("unknown optimizer '" + name + "'");
  }
  for (auto& n : notes) out.trace.events.insert(out.trace.events.begin(), n);

  std::vector<double> pos, neg, pos_t, neg_t;
  for (const auto& e : data.train.examples)
    (e.y == +1 ? pos : neg).push_back(forward(out.model, e.x));
  for (const auto& e : data.test.examples)
    (e.y == +1 ? pos_t : neg_t).push_back(forward(out.model, e.x));
  out.train_auc = auc_binary(pos, neg);
  out.test_auc = auc_binary(pos_t, neg_t);
  out.pairwise_loss = pairwise_auc_loss(out.model, data.train);
  return out;
}

inline nlohmann::ordered_json summary_json(const ExperimentConfig& cfg,
                                           const OptimizerOutcome& out, const SplitData& data) {
  const std::size_t tp = data.train.count_label(+1), tn = data.train.count_label(-1);
  nlohmann::ordered_json j;
  j["optimizer"] = out.name;
  j["seed"] = cfg.seed;
  j["final"] = {{"train_auc", out.train_auc},
                {"test_auc", out.test_auc},
                {"pairwise_loss", out.pairwise_loss},
                {"steps", out.trace.total_steps},
                {"samples", out.trace.total_samples}};
  j["train_split"] = {{"n_pos", tp},
                      {"n_neg", tn},
                      {"majority_to_minority",
                       static_cast<double>(std::max(tp, tn)) /
                           static_cast<double>(std::max<std::size_t>(1, std::min(tp, tn)))}};
  j["events"] = out.trace.events;
  j["config_echo"] = normalize_config(cfg);
  return j;
}

// `run` subcommand: one optimizer (or every one of them on the shared split),
// trace + summary + checkpoint per optimizer.
inline void run_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  Rng master(cfg.seed);
  Rng data_rng = master.split(0);
  const SplitData data = prepare_data(cfg, data_rng);
  Rng init_rng = master.split(3);
  const Model init = make_model(arch_from_config(cfg, data.train.dim), init_rng);

  std::vector<std::string> names;
  if (cfg.optimizer == "all")
    names = all_optimizer_names();
  else
    names.push_back(cfg.optimizer);

  const std::filesystem::path out_dir(cfg.out_dir);
  for (const auto& name : names) {
    const OptimizerOutcome out = run_optimizer(name, cfg, data, init);
    write_file_atomic(out_dir / (name + "_trace.csv"), trace_to_csv(out.trace));
    write_file_atomic(out_dir / (name + "_summary.json"),
                      summary_json(cfg, out, data).dump(2) + "\n");
    write_file_atomic(out_dir / (name + "_model.json"), model_to_json(out.model).dump(2) + "\n");
  }
}

// Samples consumed when the test AUC first reaches the target, judged on the
// recorded evaluation cadence.
inline std::optional<std::int64_t> samples_to_target(const RunTrace& trace, double target) {
  for (const auto& row : trace.rows)
    if (!std::isnan(row.test_auc) && row.test_auc >= target) return row.samples;
  return std::nullopt;
}

// `race` subcommand: same data, same init, same sample sequence for every
// contender; contenders run in parallel workers.
inline nlohmann::ordered_json race_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  std::vector<std::string> names = cfg.optimizers;
  if (names.empty() && cfg.optimizer == "all") names = all_optimizer_names();
  if (names.size() < 2) throw ConfigError("race: need at least two entries in optimizer.names");

  Rng master(cfg.seed);
  Rng data_rng = master.split(0);
  const SplitData data = prepare_data(cfg, data_rng);
  Rng init_rng = master.split(3);
  const Model init = make_model(arch_from_config(cfg, data.train.dim), init_rng);

  std::vector<std::future<OptimizerOutcome>> futures;
  futures.reserve(names.size());
  for (const auto& name : names)
    futures.push_back(std::async(std::launch::async, [&, name] {
      return run_optimizer(name, cfg, data, init);
    }));

  nlohmann::ordered_json results = nlohmann::ordered_json::array();
  const std::filesystem::path out_dir(cfg.out_dir);
  for (auto& fut : futures) {
    const OptimizerOutcome out = fut.get();
    nlohmann::ordered_json row;
    row["optimizer"] = out.name;
    const auto hit = cfg.target_auc > 0.0 ? samples_to_target(out.trace, cfg.target_auc)
                                          : std::nullopt;
    if (hit)
      row["samples_to_target"] = *hit;
    else
      row["samples_to_target"] = nullptr;
    row["final_test_auc"] = out.test_auc;
    row["final_train_auc"] = out.train_auc;
    row["total_samples"] = out.trace.total_samples;
    results.push_back(row);
    write_file_atomic(out_dir / (out.name + "_trace.csv"), trace_to_csv(out.trace));
  }
  nlohmann::ordered_json j;
  j["seed"] = cfg.seed;
  j["target_auc"] = cfg.target_auc;
  j["results"] = results;
  j["config_echo"] = normalize_config(cfg);
  write_file_atomic(out_dir / "race.json", j.dump(2) + "\n");
  return j;
}

// `plcheck` subcommand: builds the zero-mean Gaussian two-class testbed with
// a raw leaky-relu scorer, claims mu from the empirical second moments with a
// safety factor, gets f* from multistart full-batch descent, and audits the
// PL inequality on random probes.
inline nlohmann::ordered_json plcheck_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  Rng master(cfg.seed);
  Rng data_rng = master.split(0);
  const std::size_t d = static_cast<std::size_t>(cfg.pl_dim);
  const Vec zero(d, 0.0);
  const Dataset data = gen_two_gaussians(static_cast<std::size_t>(cfg.pl_n), d, zero, zero, 1.0,
                                         0.5, data_rng);

  const SymMatrix m_pos = class_second_moment(data, +1);
  const SymMatrix m_neg = class_second_moment(data, -1);
  const double mu_emp = mu_one_hidden_layer(cfg.pl_c1, cfg.pl_c2, m_pos, m_neg);
  const double mu_used = cfg.pl_safety * mu_emp;

  const PairwiseLeakyObjective obj(data, cfg.pl_c1, cfg.pl_c2);
  const auto f = [&](const Vec& w) { return obj.value(w); };
  const auto g = [&](const Vec& w) { return obj.gradient(w); };

  Rng oracle_rng = master.split(1);
  const double f_star = f_star_multistart(f, g, d, static_cast<int>(cfg.pl_restarts), 1.0,
                                          oracle_rng);
  Rng probe_rng = master.split(2);
  const auto probes =
      ball_probes(d, static_cast<std::size_t>(cfg.pl_probes), cfg.pl_radius, probe_rng);
  const PlReport rep = audit_pl(f, g, probes, f_star, mu_used, cfg.pl_tol);

  nlohmann::ordered_json j = rep.to_json();
  j["mu_empirical"] = mu_emp;
  j["safety_factor"] = cfg.pl_safety;
  j["f_star"] = f_star;
  j["seed"] = cfg.seed;
  j["config_echo"] = normalize_config(cfg);
  write_file_atomic(std::filesystem::path(cfg.out_dir) / "plreport.json", j.dump(2) + "\n");
  return j;
}

// `datagen` subcommand: writes the prepared split as LIBSVM files.
inline void datagen_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  Rng master(cfg.seed);
  Rng data_rng = master.split(0);
  const SplitData data = prepare_data(cfg, data_rng);
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  write_libsvm(data.train, (fs::path(cfg.out_dir) / "train.libsvm").string());
  write_libsvm(data.test, (fs::path(cfg.out_dir) / "test.libsvm").string());
}

}  // namespace aucpd
