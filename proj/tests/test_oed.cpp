#include "support.hpp"

#include "oedgrid/errors.hpp"
#include "oedgrid/estimator.hpp"
#include "oedgrid/oed.hpp"

#include <doctest.h>

using namespace oedgrid;
using testing::case5;

namespace {

Matrix scaled_identity(int n, double s) { return s * Matrix::Identity(n, n); }

const Matrix& sigma() {
  static const Matrix s = scaled_identity(20, 1e-4);
  return s;
}

// Random SPD prior covariance with eigenvalues spread over a few decades.
Matrix random_prior(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix a(12, 12);
  for (int i = 0; i < a.size(); ++i) a.data()[i] = n(rng);
  return 0.1 * a * a.transpose() + scaled_identity(12, 0.01);
}

AdmittanceParams perturbed_truth(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> f(0.8, 1.2);
  Vector y = case5().y_true.values;
  for (int i = 0; i < y.size(); ++i) y[i] *= f(rng);
  return AdmittanceParams(y);
}

// Inputs inside the box, within +/- 20% of the box width around the nominal dispatch.
Vector random_input(const Network& net, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> f(-0.2, 0.2);
  const Bounds& b = net.bounds();
  Vector u = case5().u_nominal.values;
  for (int i = 0; i < u.size(); ++i) {
    u[i] = std::clamp(u[i] + f(rng) * (b.u_hi[i] - b.u_lo[i]), b.u_lo[i], b.u_hi[i]);
  }
  return u;
}

void check_feasible(const Network& net, const AdmittanceParams& y, const OedSolution& s) {
  const Bounds& b = net.bounds();
  const double tol = 1e-8;
  CHECK((s.u.values - b.u_lo).minCoeff() >= -tol);
  CHECK((b.u_hi - s.u.values).minCoeff() >= -tol);
  CHECK((s.x.values - b.x_lo).minCoeff() >= -tol);
  CHECK((b.x_hi - s.x.values).minCoeff() >= -tol);
  const Vector r = power_residuum_all(net, s.x, y) - net_supply(net, s.u);
  CHECK(r.cwiseAbs().maxCoeff() <= tol);
  const PowerPair slack = slack_power(net, s.x, y);
  CHECK(slack.p >= b.slack_lo[0] - tol);
  CHECK(slack.p <= b.slack_hi[0] + tol);
  CHECK(slack.q >= b.slack_lo[1] - tol);
  CHECK(slack.q <= b.slack_hi[1] + tol);
}

}  // namespace

TEST_CASE("zero sensitivity gives the prior trace plus the regularizer") {
  const Matrix sigma0 = scaled_identity(12, 3.0);
  const InformationModel info(sigma(), sigma0);
  const GeneratorInput u(Vector::Constant(6, 1.0));
  const GeneratorInput u_minus(Vector::Zero(6));
  const double v = design_objective(info, Matrix::Zero(20, 12), 0.5, u, u_minus);
  CHECK(v == doctest::Approx(36.0 + 0.5 * 6.0).epsilon(1e-14));
}

TEST_CASE("without regularization the objective at u^- is the total variance") {
  const Network& net = case5().network;
  const Matrix sigma0 = scaled_identity(12, 10.0);
  const GridState& x = testing::case5_solution().state;
  const double v = oed_objective(net, x, case5().u_nominal, case5().y_true, sigma(), sigma0, 0.0, case5().u_nominal);
  const FisherInfo f = fisher_information(net, x, case5().y_true, sigma(), sigma0);
  CHECK(v == doctest::Approx(f.total_variance).epsilon(1e-12));
}

TEST_CASE("reduced gradient matches central differences on 10 random points") {
  const Network& net = case5().network;
  std::mt19937_64 rng(41);
  int checked = 0;
  for (int trial = 0; trial < 40 && checked < 10; ++trial) {
    const AdmittanceParams y = perturbed_truth(rng);
    const Matrix sigma0 = random_prior(rng);
    const GeneratorInput u_minus(random_input(net, rng));
    ReducedDesignProblem p(net, y, sigma(), sigma0, u_minus, OedConfig{});
    p.set_barrier_scale(1e-3);
    const Vector u = random_input(net, rng);
    const auto e = p.evaluate(u, GridState::flat(net), true);
    if (!e.feasible) continue;
    const double h = 1e-6;
    Vector fd_obj(u.size()), fd_merit(u.size());
    bool ok = true;
    for (int i = 0; i < u.size() && ok; ++i) {
      Vector up = u, um = u;
      up[i] += h;
      um[i] -= h;
      const auto ep = p.evaluate(up, e.x, false);
      const auto em = p.evaluate(um, e.x, false);
      ok = ep.feasible && em.feasible;
      fd_obj[i] = (ep.objective - em.objective) / (2 * h);
      fd_merit[i] = (ep.merit - em.merit) / (2 * h);
    }
    if (!ok) continue;
    const double scale = std::max(1.0, fd_obj.cwiseAbs().maxCoeff());
    CHECK((e.objective_gradient - fd_obj).cwiseAbs().maxCoeff() / scale <= 1e-4);
    const double mscale = std::max(1.0, fd_merit.cwiseAbs().maxCoeff());
    CHECK((e.merit_gradient - fd_merit).cwiseAbs().maxCoeff() / mscale <= 1e-4);
    ++checked;
  }
  CHECK(checked == 10);
}

TEST_CASE("a dominant regularizer keeps the previous input") {
  const Network& net = case5().network;
  OedConfig cfg;
  cfg.rho = 1e9;
  const OedSolution s = solve_oed(net, case5().y_true, sigma(), scaled_identity(12, 1.0), case5().u_nominal, cfg);
  CHECK((s.u.values - case5().u_nominal.values).cwiseAbs().maxCoeff() <= 1e-6);
  check_feasible(net, case5().y_true, s);
}

TEST_CASE("designs never worsen the objective and stay feasible on 20 random priors") {
  const Network& net = case5().network;
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    const AdmittanceParams y = perturbed_truth(rng);
    const Matrix sigma0 = random_prior(rng);
    const GeneratorInput& u_minus = case5().u_nominal;
    ReducedDesignProblem p(net, y, sigma(), sigma0, u_minus, OedConfig{});
    const auto start = p.evaluate(u_minus.values, GridState::flat(net), false);
    REQUIRE(start.feasible);
    const OedSolution s = solve_oed(net, y, sigma(), sigma0, u_minus);
    CHECK(s.objective <= start.objective);
    check_feasible(net, y, s);
    // The reduced objective agrees with the objective evaluated at the returned state.
    const double full = oed_objective(net, s.x, s.u, y, sigma(), sigma0, OedConfig{}.rho, u_minus);
    CHECK(full == doctest::Approx(s.objective).epsilon(1e-6));
  }
}

TEST_CASE("the design lowers the total variance") {
  const Network& net = case5().network;
  const Matrix sigma0 = scaled_identity(12, 1e2);
  const OedSolution s = solve_oed(net, case5().y_true, sigma(), sigma0, case5().u_nominal);
  const double before = fisher_information(net, testing::case5_solution().state, case5().y_true, sigma(), sigma0)
                            .total_variance;
  const double after = fisher_information(net, s.x, case5().y_true, sigma(), sigma0).total_variance;
  CHECK(after < before);
  CHECK(s.kkt_residual >= 0.0);
}

TEST_CASE("infeasible starts") {
  const Network& net = case5().network;
  Vector outside = case5().u_nominal.values;
  outside[0] = net.bounds().u_hi[0] + 1.0;
  CHECK_THROWS_AS(solve_oed(net, case5().y_true, sigma(), scaled_identity(12, 1.0), GeneratorInput(outside)),
                  InfeasibleStart);
  // Admittances two orders of magnitude too small cannot carry the nominal dispatch.
  const AdmittanceParams weak(0.01 * case5().y_true.values);
  CHECK_THROWS_AS(solve_oed(net, weak, sigma(), scaled_identity(12, 1.0), case5().u_nominal), InfeasibleStart);
}

TEST_CASE("finite-difference gradient mode reaches a comparable design") {
  const Network& net = case5().network;
  const Matrix sigma0 = scaled_identity(12, 1e2);
  OedConfig fd;
  fd.gradient_mode = GradientMode::FiniteDifference;
  const OedSolution a = solve_oed(net, case5().y_true, sigma(), sigma0, case5().u_nominal);
  const OedSolution b = solve_oed(net, case5().y_true, sigma(), sigma0, case5().u_nominal, fd);
  CHECK(b.objective == doctest::Approx(a.objective).epsilon(1e-3));
}

TEST_CASE("baseline input is the first design") {
  OedSolution s;
  s.u = GeneratorInput(Vector::LinSpaced(6, 0.0, 1.0));
  CHECK(baseline_input(s).values == s.u.values);
}
