#include "oedgrid/experiment_loop.hpp"

#include "oedgrid/errors.hpp"
#include "oedgrid/linalg.hpp"
#include "oedgrid/measurement.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

namespace oedgrid {

const char* policy_name(Policy p) {
  return p == Policy::Oed ? "oed" : "constant";
}

std::optional<Policy> parse_policy(const std::string& name) {
  if (name == "oed") return Policy::Oed;
  if (name == "constant") return Policy::ConstantInput;
  return std::nullopt;
}

const char* estimation_name(Estimation e) {
  return e == Estimation::Recursive ? "recursive" : "batch";
}

std::optional<Estimation> parse_estimation(const std::string& name) {
  if (name == "recursive") return Estimation::Recursive;
  if (name == "batch") return Estimation::Batch;
  return std::nullopt;
}

namespace {

void validate(const RunConfig& c) {
  const Network& net = c.network;
  check_params(net, c.y_true);
  check_input(net, c.u_init);
  if (c.y_init) check_params(net, *c.y_init);
  if (!(c.eps > 0.0)) throw InvalidArgument("eps must be positive");
  if (c.max_iters < 1) throw InvalidArgument("max_iters must be at least 1");
  if (!(c.rho >= 0.0)) throw InvalidArgument("rho must be nonnegative");
  if (!c.sigma && !(c.noise_variance > 0.0)) throw InvalidArgument("noise variance must be positive");
  if (!c.sigma0 && !(c.prior_variance > 0.0)) throw InvalidArgument("prior variance must be positive");
  if (c.sigma && (c.sigma->rows() != net.measurement_dim() || c.sigma->cols() != net.measurement_dim())) {
    throw DimensionMismatch("measurement covariance does not match the network");
  }
  if (c.sigma0 && (c.sigma0->rows() != net.param_dim() || c.sigma0->cols() != net.param_dim())) {
    throw DimensionMismatch("prior covariance does not match the network");
  }
}

double design_value(const Network& net, const AdmittanceParams& y_minus, const Matrix& sigma,
                    const Matrix& sigma0, const GeneratorInput& u_minus, const OedConfig& cfg,
                    const Vector& u, const GridState& warm) {
  try {
    ReducedDesignProblem p(net, y_minus, sigma, sigma0, u_minus, cfg);
    const auto e = p.evaluate(u, warm, false);
    if (e.feasible) return e.objective;
  } catch (const NumericalError&) {
  }
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

RunResult run(const RunConfig& config) {
  validate(config);
  const Network& net = config.network;
  const int m = net.measurement_dim();
  const int np = net.param_dim();

  const Matrix sigma = config.sigma ? *config.sigma : Matrix(config.noise_variance * Matrix::Identity(m, m));
  Matrix sigma0 = config.sigma0 ? *config.sigma0 : Matrix(config.prior_variance * Matrix::Identity(np, np));
  Matrix information;
  {
    auto inv = spd_inverse(sigma0);
    if (!inv) throw InvalidArgument("prior covariance is not positive definite");
    information = std::move(*inv);
  }

  OedConfig oed_cfg = config.oed;
  oed_cfg.rho = config.rho;
  if (!oed_cfg.restore_towards) oed_cfg.restore_towards = config.u_init;

  AdmittanceParams y_minus = config.y_init ? *config.y_init : AdmittanceParams::uniform(net, 0.1, -1.0);
  const Prior initial_prior{y_minus, sigma0};
  std::vector<Snapshot> snapshots;
  std::vector<GridState> batch_x;
  GeneratorInput u_minus = config.u_init;
  GridState x_est = GridState::flat(net);
  GridState x_true_warm = GridState::flat(net);
  bool have_estimate = false;
  std::optional<GeneratorInput> constant_u;

  MeasurementSimulator simulator(NoiseModel{sigma, config.seed, true});
  RunResult result;

  for (int k = 1; k <= config.max_iters; ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    EstimateRecord rec;
    rec.iter = k;

    // 1) design
    if (constant_u) {
      rec.u = *constant_u;
      rec.oed_objective =
          design_value(net, y_minus, sigma, sigma0, u_minus, oed_cfg, rec.u.values, x_est);
    } else {
      try {
        const OedSolution s = solve_oed(net, y_minus, sigma, sigma0, u_minus, oed_cfg);
        rec.u = s.u;
        rec.oed_objective = s.objective;
        rec.design_restored = s.restored;
      } catch (const InfeasibleStart& e) {
        rec.u = u_minus;
        rec.design_fallback = true;
        rec.oed_objective = std::numeric_limits<double>::quiet_NaN();
        rec.note = e.what();
      } catch (const Error& e) {
        throw RunError(k, "design", e.what());
      }
      if (config.policy == Policy::ConstantInput) constant_u = rec.u;
    }

    // 2) measure
    try {
      SimulatedMeasurement meas = simulator.simulate(net, config.y_true, rec.u, x_true_warm);
      rec.eta = std::move(meas.eta);
      x_true_warm = std::move(meas.x_true);
    } catch (const Error& e) {
      throw RunError(k, "measure", e.what());
    }

    // 3) estimate
    const Prior prior{y_minus, sigma0};
    std::optional<MleSolution> est;
    std::vector<GridState> starts;
    starts.emplace_back(rec.eta.head(net.state_dim()));
    starts.push_back(x_est);
    for (const GridState& x0 : starts) {
      try {
        MleSolution s = solve_mle(net, rec.eta, rec.u, prior, sigma, x0, y_minus, config.mle);
        if (!est || s.objective < est->objective) est = std::move(s);
      } catch (const NumericalError& e) {
        rec.note = e.what();
      }
    }
    if (!est) {
      rec.mle_retried = true;
      try {
        est = solve_mle(net, rec.eta, rec.u, prior, sigma, GridState::flat(net), y_minus, config.mle);
      } catch (const NumericalError& e) {
        if (!have_estimate) throw RunError(k, "estimate", e.what());
        rec.mle_failed = true;
        rec.note = e.what();
      }
    }
    if (est) {
      rec.x = est->x;
      rec.y = est->y;
    } else {
      rec.x = x_est;
      rec.y = y_minus;
    }

    if (config.estimation == Estimation::Batch) {
      snapshots.push_back({rec.u, rec.eta});
      batch_x.push_back(rec.x);
      std::optional<BatchMleSolution> best;
      std::vector<AdmittanceParams> seeds{rec.y};
      if (have_estimate) seeds.push_back(y_minus);
      for (const auto& y0 : seeds) {
        try {
          BatchMleSolution b =
              solve_batch_mle(net, snapshots, initial_prior, sigma, y0, batch_x, config.batch);
          if (!best || b.objective < best->objective) best = std::move(b);
        } catch (const NumericalError&) {
        }
      }
      if (best) {
        batch_x = best->x;
        rec.x = batch_x.back();
        rec.y = best->y;
      } else {
        rec.note = "batch estimate failed, recursive estimate kept";
      }
    }

    try {
      const InformationModel info = InformationModel::from_information(sigma, information);
      FisherInfo f = info.fisher(parameter_sensitivity(net, rec.x, rec.y));
      rec.fisher = std::move(f.matrix);
      rec.covariance = std::move(f.inverse);
      rec.total_variance = f.total_variance;
    } catch (const Error& e) {
      throw RunError(k, "information", e.what());
    }
    const RelativeErrors err = mre(rec.y, config.y_true);
    rec.mre_g = err.g;
    rec.mre_b = err.b;

    // 5) update
    y_minus = rec.y;
    sigma0 = rec.covariance;
    information = rec.fisher;
    u_minus = rec.u;
    x_est = rec.x;
    have_estimate = true;

    rec.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    const bool done = rec.total_variance < config.eps;
    result.records.push_back(std::move(rec));

    // 4) termination check
    if (done) {
      result.termination = Termination::TraceBelowEps;
      break;
    }
  }
  return result;
}

ComparisonSummary summarize(const RunResult& oed, const RunResult& baseline, std::uint64_t seed) {
  if (oed.records.empty() || baseline.records.empty()) {
    throw InvalidArgument("cannot summarize an empty run");
  }
  ComparisonSummary s;
  s.seed = seed;
  const auto& a = oed.records.back();
  const auto& b = baseline.records.back();
  s.iterations = static_cast<int>(std::min(oed.records.size(), baseline.records.size()));
  s.oed_mre_g = a.mre_g;
  s.oed_mre_b = a.mre_b;
  s.oed_trace = a.total_variance;
  s.baseline_mre_g = b.mre_g;
  s.baseline_mre_b = b.mre_b;
  s.baseline_trace = b.total_variance;
  for (int k = s.iterations; k >= 1; --k) {
    if (oed.records[k - 1].total_variance <= baseline.records[k - 1].total_variance) {
      s.crossover = k;
    } else {
      break;
    }
  }
  return s;
}

Comparison compare(const RunConfig& config_oed, const RunConfig& config_baseline) {
  const Network& a = config_oed.network;
  const Network& b = config_baseline.network;
  if (a.n_buses() != b.n_buses() || a.lines() != b.lines() || a.generators() != b.generators() ||
      a.p_demand() != b.p_demand() || a.q_demand() != b.q_demand()) {
    throw InvalidArgument("compared runs use different networks");
  }
  if (config_oed.y_true.values != config_baseline.y_true.values) {
    throw InvalidArgument("compared runs use different ground truth");
  }
  if (config_oed.seed != config_baseline.seed) {
    throw InvalidArgument("compared runs use different seeds");
  }
  Comparison c;
  c.oed = run(config_oed);
  c.baseline = run(config_baseline);
  c.summary = summarize(c.oed, c.baseline, config_oed.seed);
  return c;
}

std::vector<Comparison> compare_seeds(const RunConfig& base, const std::vector<std::uint64_t>& seeds,
                                      int threads) {
  std::vector<Comparison> out(seeds.size());
  std::vector<std::exception_ptr> errors(seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < seeds.size(); i = next++) {
      try {
        RunConfig oed = base;
        oed.seed = seeds[i];
        oed.policy = Policy::Oed;
        RunConfig constant = oed;
        constant.policy = Policy::ConstantInput;
        out[i] = compare(oed, constant);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  int n = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  n = std::clamp(n, 1, std::max(1, static_cast<int>(seeds.size())));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace oedgrid
