#include "oedgrid/cli.hpp"

#include "oedgrid/case_io.hpp"
#include "oedgrid/errors.hpp"
#include "oedgrid/experiment_loop.hpp"
#include "oedgrid/powerflow.hpp"
#include "oedgrid/records.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace oedgrid {

namespace {

struct RunFlags {
  std::string case_path;
  std::string policy = "oed";
  std::string estimator = "batch";
  std::optional<std::uint64_t> seed;
  double noise = 1e-4;
  double rho = 8e-4;
  double eps = 1e-3;
  int max_iters = 100;
  double prior_variance = 1e4;
  double y_init_g = 0.1;
  double y_init_b = -1.0;
  std::string slack_box = "wide";
  std::string out;
  std::string truth_out;
  std::string config;
  bool timing = false;
};

bool given(const CLI::App& cmd, const char* flag) {
  const CLI::Option* o = cmd.get_option_no_throw(flag);
  return o != nullptr && o->count() > 0;
}

// Config-file values apply only where the flag was not given on the command line.
void apply_config(RunFlags& f, const CLI::App& cmd) {
  if (f.config.empty()) return;
  std::ifstream in(f.config);
  if (!in) throw InvalidArgument("cannot open config file " + f.config);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument("config file " + f.config + ": " + e.what());
  }
  auto take = [&](const char* key, const char* flag, auto& target) {
    if (!j.contains(key) || given(cmd, flag)) return;
    try {
      j.at(key).get_to(target);
    } catch (const nlohmann::json::exception&) {
      throw InvalidArgument(std::string("config key '") + key + "' has the wrong type");
    }
  };
  take("policy", "--policy", f.policy);
  take("estimator", "--estimator", f.estimator);
  if (j.contains("seed") && !given(cmd, "--seed")) f.seed = j.at("seed").get<std::uint64_t>();
  take("noise", "--noise", f.noise);
  take("rho", "--rho", f.rho);
  take("eps", "--eps", f.eps);
  take("max_iters", "--max-iters", f.max_iters);
  take("prior_variance", "--prior-variance", f.prior_variance);
  take("y_init_g", "--y-init-g", f.y_init_g);
  take("y_init_b", "--y-init-b", f.y_init_b);
  take("slack_box", "--slack-box", f.slack_box);
}

std::uint64_t resolve_seed(const RunFlags& f) {
  if (f.seed) return *f.seed;
  if (const char* env = std::getenv("OEDGRID_SEED")) {
    try {
      std::size_t pos = 0;
      const auto v = std::stoull(env, &pos);
      if (pos == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw InvalidArgument(std::string("OEDGRID_SEED is not an unsigned integer: ") + env);
  }
  return 0;
}

CaseOptions case_options(const std::string& slack_box) {
  CaseOptions o;
  if (slack_box == "wide") {
    o.slack_box = SlackBoxPolicy::Wide;
  } else if (slack_box == "dataset") {
    o.slack_box = SlackBoxPolicy::Dataset;
  } else {
    throw InvalidArgument("--slack-box must be 'wide' or 'dataset', got '" + slack_box + "'");
  }
  return o;
}

CaseProblem load(const std::string& path, const std::string& slack_box) {
  CaseProblem p = load_problem(path, case_options(slack_box));
  for (const auto& w : p.warnings) std::cerr << "warning: " << w << '\n';
  return p;
}

RunConfig make_config(const CaseProblem& p, const RunFlags& f) {
  RunConfig c(p.network);
  c.y_true = p.y_true;
  c.u_init = p.u_nominal;
  c.y_init = AdmittanceParams::uniform(p.network, f.y_init_g, f.y_init_b);
  c.prior_variance = f.prior_variance;
  c.noise_variance = f.noise;
  c.rho = f.rho;
  c.eps = f.eps;
  c.max_iters = f.max_iters;
  c.seed = resolve_seed(f);
  const auto policy = parse_policy(f.policy);
  if (!policy) throw InvalidArgument("--policy must be 'oed' or 'constant', got '" + f.policy + "'");
  c.policy = *policy;
  const auto estimation = parse_estimation(f.estimator);
  if (!estimation) {
    throw InvalidArgument("--estimator must be 'recursive' or 'batch', got '" + f.estimator + "'");
  }
  c.estimation = *estimation;
  return c;
}

void add_run_options(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("case", f.case_path, "case file (.m or .json)")->required();
  cmd->add_option("--noise", f.noise, "measurement noise variance");
  cmd->add_option("--rho", f.rho, "input regularization weight");
  cmd->add_option("--eps", f.eps, "trace termination tolerance");
  cmd->add_option("--max-iters", f.max_iters, "iteration limit");
  cmd->add_option("--prior-variance", f.prior_variance, "initial prior variance");
  cmd->add_option("--y-init-g", f.y_init_g, "initial conductance guess");
  cmd->add_option("--y-init-b", f.y_init_b, "initial susceptance guess");
  cmd->add_option("--slack-box", f.slack_box, "slack bounds: wide or dataset");
  cmd->add_option("--estimator", f.estimator, "batch (all snapshots) or recursive (newest only)");
  cmd->add_option("--config", f.config, "JSON file with default values for the options");
}

std::ostream& open_output(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path, std::ios::binary);
  if (!file) throw InvalidArgument("cannot write " + path);
  return file;
}

int cmd_parse(const std::string& path, const std::string& slack_box) {
  const CaseProblem p = load(path, slack_box);
  std::cout << problem_to_json(p) << '\n';
  return 0;
}

int cmd_powerflow(const std::string& path, const std::string& slack_box,
                  const std::vector<double>& u_values) {
  const CaseProblem p = load(path, slack_box);
  GeneratorInput u = p.u_nominal;
  if (!u_values.empty()) {
    if (static_cast<int>(u_values.size()) != p.network.input_dim()) {
      throw InvalidArgument(fmt::format("--u expects {} values, got {}", p.network.input_dim(),
                                        u_values.size()));
    }
    u = GeneratorInput(Eigen::Map<const Vector>(u_values.data(), u_values.size()));
  }
  const PowerflowSolution s = solve_powerflow(p.network, p.y_true, u, GridState::flat(p.network));
  const PowerPair slack = slack_power(p.network, s.state, p.y_true);
  nlohmann::json buses = nlohmann::json::array();
  buses.push_back({{"id", p.bus_ids[0]}, {"v", p.network.slack_voltage()},
                   {"theta", p.network.slack_angle()}});
  for (int k = 1; k < p.network.n_buses(); ++k) {
    buses.push_back({{"id", p.bus_ids[k]}, {"v", s.state.v(k)}, {"theta", s.state.theta(k)}});
  }
  nlohmann::json out{{"iterations", s.iterations},
                     {"residual", s.residual_norm},
                     {"buses", std::move(buses)},
                     {"slack", {{"p", slack.p}, {"q", slack.q}}}};
  std::cout << out.dump(2) << '\n';
  return 0;
}

int cmd_run(const RunFlags& f) {
  const CaseProblem p = load(f.case_path, f.slack_box);
  const RunConfig c = make_config(p, f);
  const RunResult r = run(c);
  for (const auto& rec : r.records) {
    if (rec.design_fallback) {
      std::cerr << fmt::format("warning: iteration {}: no feasible design, previous input kept\n",
                               rec.iter);
    }
    if (rec.mle_failed) {
      std::cerr << fmt::format("warning: iteration {}: estimation failed, previous estimate kept\n",
                               rec.iter);
    }
  }
  std::ofstream file;
  std::ostream& out = open_output(f.out, file);
  write_run_csv(out, r.records, input_names(p), f.timing);
  if (!f.truth_out.empty()) {
    std::ofstream t(f.truth_out, std::ios::binary);
    if (!t) throw InvalidArgument("cannot write " + f.truth_out);
    t << truth_json(p, &r.records.back()) << '\n';
  }
  return 0;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      seeds.push_back(std::stoull(item, &pos));
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InvalidArgument("--seeds: '" + item + "' is not an unsigned integer");
    }
  }
  if (seeds.empty()) throw InvalidArgument("--seeds needs at least one seed");
  return seeds;
}

int cmd_compare(const RunFlags& f, const std::string& seeds_text, int threads) {
  const CaseProblem p = load(f.case_path, f.slack_box);
  const RunConfig base = make_config(p, f);
  const auto results = compare_seeds(base, parse_seeds(seeds_text), threads);
  std::vector<ComparisonSummary> rows;
  for (const auto& c : results) rows.push_back(c.summary);
  std::ofstream file;
  write_summary_csv(open_output(f.out, file), rows);
  return 0;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Online estimation of line admittances with designed generator excitations",
               "oedgrid"};
  app.require_subcommand(1);

  std::string parse_path;
  std::string parse_slack = "wide";
  auto* parse = app.add_subcommand("parse", "print the network of a case file as JSON");
  parse->add_option("case", parse_path, "case file (.m or .json)")->required();
  parse->add_option("--slack-box", parse_slack, "slack bounds: wide or dataset");

  std::string pf_path;
  std::string pf_slack = "wide";
  std::vector<double> pf_u;
  auto* pf = app.add_subcommand("powerflow", "solve the power flow at the true admittances");
  pf->add_option("case", pf_path, "case file (.m or .json)")->required();
  pf->add_option("--u", pf_u, "generator set-points p,q per controllable generator")
      ->delimiter(',');
  pf->add_option("--slack-box", pf_slack, "slack bounds: wide or dataset");

  RunFlags run_flags;
  auto* run_cmd = app.add_subcommand("run", "run the estimation loop and write one CSV row per iteration");
  add_run_options(run_cmd, run_flags);
  run_cmd->add_option("--policy", run_flags.policy, "oed or constant");
  run_cmd->add_option("--seed", run_flags.seed, "noise seed (default: OEDGRID_SEED, then 0)");
  run_cmd->add_option("--out", run_flags.out, "CSV output path (default: stdout)");
  run_cmd->add_option("--truth-out", run_flags.truth_out, "JSON with true and estimated admittances");
  run_cmd->add_flag("--timing", run_flags.timing, "record wall-clock time per iteration");

  RunFlags cmp_flags;
  std::string seeds_text;
  int threads = 0;
  auto* cmp = app.add_subcommand("compare", "paired designed vs constant-input runs over seeds");
  add_run_options(cmp, cmp_flags);
  cmp->add_option("--seeds", seeds_text, "comma-separated seeds")->required();
  cmp->add_option("--out", cmp_flags.out, "summary CSV path (default: stdout)");
  cmp->add_option("--threads", threads, "worker threads (default: all cores)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*parse) return cmd_parse(parse_path, parse_slack);
    if (*pf) return cmd_powerflow(pf_path, pf_slack, pf_u);
    if (*run_cmd) {
      apply_config(run_flags, *run_cmd);
      return cmd_run(run_flags);
    }
    if (*cmp) {
      apply_config(cmp_flags, *cmp);
      return cmd_compare(cmp_flags, seeds_text, threads);
    }
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace oedgrid
