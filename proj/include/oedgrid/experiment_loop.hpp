#pragma once

// Online estimation loop: design -> measure -> estimate -> check -> update.

#include "oedgrid/estimator.hpp"
#include "oedgrid/grid_model.hpp"
#include "oedgrid/oed.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace oedgrid {

enum class Policy {
  Oed,            // a new design every iteration
  ConstantInput,  // the first design, kept for the whole run
};

const char* policy_name(Policy p);
std::optional<Policy> parse_policy(const std::string& name);

enum class Estimation {
  Recursive,  // problem (y^-, Sigma_0) prior + the newest snapshot only
  Batch,      // initial prior + every snapshot so far, seeded by the recursive estimate
};

const char* estimation_name(Estimation e);
std::optional<Estimation> parse_estimation(const std::string& name);

struct RunConfig {
  Network network;
  AdmittanceParams y_true;
  GeneratorInput u_init;  // u^- of the first iteration
  std::optional<AdmittanceParams> y_init;  // g = 0.1, b = -1 per line when empty
  double prior_variance = 1e4;             // Sigma_0 = prior_variance * I, unless sigma0 is set
  std::optional<Matrix> sigma0;
  double noise_variance = 1e-4;            // Sigma = noise_variance * I, unless sigma is set
  std::optional<Matrix> sigma;
  double rho = 8e-4;
  double eps = 1e-3;
  int max_iters = 100;
  std::uint64_t seed = 0;
  Policy policy = Policy::Oed;
  Estimation estimation = Estimation::Batch;
  OedConfig oed;   // rho is taken from the field above
  MleOptions mle;
  BatchMleOptions batch;

  explicit RunConfig(Network net) : network(std::move(net)) {}
};

struct EstimateRecord {
  int iter = 0;  // 1-based
  GeneratorInput u;
  Vector eta;
  GridState x;
  AdmittanceParams y;
  Matrix fisher;
  Matrix covariance;  // F^-1, the next prior
  double total_variance = 0.0;
  double mre_g = 0.0;
  double mre_b = 0.0;
  double oed_objective = 0.0;  // design objective at u under y^-; NaN if not defined
  double wall_ms = 0.0;
  bool design_fallback = false;  // no feasible design at y^-, u^- reused
  bool design_restored = false;  // u^- infeasible at y^-, design started towards u_init
  bool mle_retried = false;
  bool mle_failed = false;       // both attempts failed, previous estimate reused
  std::string note;
};

enum class Termination { TraceBelowEps, MaxIterations };

struct RunResult {
  std::vector<EstimateRecord> records;
  Termination termination = Termination::MaxIterations;
};

// Throws RunError carrying the iteration and stage when a step fails for good.
RunResult run(const RunConfig& config);

struct ComparisonSummary {
  std::uint64_t seed = 0;
  int iterations = 0;
  double oed_mre_g = 0.0, oed_mre_b = 0.0, oed_trace = 0.0;
  double baseline_mre_g = 0.0, baseline_mre_b = 0.0, baseline_trace = 0.0;
  // First iteration from which the OED trace stays at or below the baseline trace
  // for the rest of the common horizon; -1 when it never does.
  int crossover = -1;
};

struct Comparison {
  RunResult oed;
  RunResult baseline;
  ComparisonSummary summary;
};

// Paired runs; the configs must agree on network, truth and seed.
Comparison compare(const RunConfig& config_oed, const RunConfig& config_baseline);

// One paired comparison per seed, spread across threads, returned in seed order.
std::vector<Comparison> compare_seeds(const RunConfig& base, const std::vector<std::uint64_t>& seeds,
                                      int threads = 0);

ComparisonSummary summarize(const RunResult& oed, const RunResult& baseline, std::uint64_t seed);

}  // namespace oedgrid
