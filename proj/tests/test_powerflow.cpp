#include "support.hpp"

#include "oedgrid/errors.hpp"
#include "oedgrid/powerflow.hpp"

#include <doctest.h>

using namespace oedgrid;
using testing::case5;

namespace {

Network no_load(const Network& net) {
  return net.with_demand(Vector::Zero(net.n_buses()), Vector::Zero(net.n_buses()));
}

Network two_bus(double p_demand) {
  NetworkSpec s;
  s.n_buses = 2;
  s.lines = {{0, 1}};
  s.generators = {0};
  s.p_demand = Vector::Zero(2);
  s.q_demand = Vector::Zero(2);
  s.p_demand[1] = p_demand;
  return Network(s);
}

}  // namespace

TEST_CASE("flat state is the root without load") {
  const Network net = no_load(case5().network);
  const GeneratorInput u(Vector::Zero(net.input_dim()));
  const PowerflowSolution s = solve_powerflow(net, case5().y_true, u, GridState::flat(net));
  CHECK(s.iterations <= 1);
  CHECK((s.state.values - GridState::flat(net).values).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("case-5 nominal dispatch converges from a flat start") {
  const Network& net = case5().network;
  const PowerflowSolution& s = testing::case5_solution();
  const Vector r = power_residuum_all(net, s.state, case5().y_true) - net_supply(net, case5().u_nominal);
  CHECK(r.cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(s.residual_norm <= 1e-10);
  CHECK(s.residual_history.size() == static_cast<std::size_t>(s.iterations) + 1);
}

TEST_CASE("Newton converges quadratically near the root") {
  const auto& h = testing::case5_solution().residual_history;
  int checked = 0;
  for (std::size_t k = 0; k + 1 < h.size(); ++k) {
    if (h[k] <= 1e-4 && h[k + 1] > 0.0) {
      CHECK(h[k + 1] <= std::pow(h[k], 1.5));
      ++checked;
    }
  }
  CHECK(checked >= 1);
}

TEST_CASE("overloaded grid has no solution") {
  const Network& net = case5().network;
  const Network heavy = net.with_demand(100.0 * net.p_demand(), 100.0 * net.q_demand());
  bool failed = false;
  try {
    solve_powerflow(heavy, case5().y_true, case5().u_nominal, GridState::flat(heavy));
  } catch (const NonConvergence&) {
    failed = true;
  } catch (const SingularJacobian&) {
    failed = true;
  }
  CHECK(failed);
}

TEST_CASE("warm starts never need more iterations than flat starts along a continuation") {
  const Network& net = case5().network;
  GridState warm = testing::case5_solution().state;
  for (int step = 1; step <= 10; ++step) {
    const double scale = 1.0 + 0.02 * step;
    const Network loaded = net.with_demand(scale * net.p_demand(), scale * net.q_demand());
    const GeneratorInput u(scale * case5().u_nominal.values);
    const PowerflowSolution w = solve_powerflow(loaded, case5().y_true, u, warm);
    const PowerflowSolution f = solve_powerflow(loaded, case5().y_true, u, GridState::flat(loaded));
    CHECK(w.iterations <= f.iterations);
    CHECK((w.state.values - f.state.values).cwiseAbs().maxCoeff() < 1e-8);
    warm = w.state;
  }
}

TEST_CASE("state sensitivity matches finite-difference re-solves") {
  const Network& net = case5().network;
  const GeneratorInput& u = case5().u_nominal;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> f(0.8, 1.2);
  for (int trial = 0; trial < 10; ++trial) {
    Vector yv = case5().y_true.values;
    for (int i = 0; i < yv.size(); ++i) yv[i] *= f(rng);
    const AdmittanceParams y(yv);
    const PowerflowSolution s = solve_powerflow(net, y, u, testing::case5_solution().state);
    const Matrix analytic = state_sensitivity(net, s, y);
    const Matrix fd = testing::central_difference(
        [&](const Vector& p) {
          PowerflowOptions o;
          o.tol = 1e-13;
          return solve_powerflow(net, AdmittanceParams(p), u, s.state, o).state.values;
        },
        yv);
    CHECK(testing::rel_error(analytic, fd) <= 1e-4);
  }
}

TEST_CASE("input sensitivity matches finite-difference re-solves") {
  const Network& net = case5().network;
  const PowerflowSolution& s = testing::case5_solution();
  const Matrix fd = testing::central_difference(
      [&](const Vector& uv) {
        PowerflowOptions o;
        o.tol = 1e-13;
        return solve_powerflow(net, case5().y_true, GeneratorInput(uv), s.state, o).state.values;
      },
      case5().u_nominal.values);
  CHECK(testing::rel_error(input_sensitivity(net, s), fd) <= 1e-4);
}

TEST_CASE("no-load flat solution does not move with the admittances") {
  const Network net = no_load(case5().network);
  const PowerflowSolution s = solve_powerflow(net, case5().y_true, GeneratorInput(Vector::Zero(net.input_dim())),
                                              GridState::flat(net));
  CHECK(state_sensitivity(net, s, case5().y_true).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("two-bus angle sensitivity flips sign with the flow direction") {
  const AdmittanceParams y(Vector{{1.0, -10.0}});
  const Network load = two_bus(0.5);
  const Network feed = two_bus(-0.5);
  const GeneratorInput none(Vector(0));
  const PowerflowSolution a = solve_powerflow(load, y, none, GridState::flat(load));
  const PowerflowSolution b = solve_powerflow(feed, y, none, GridState::flat(feed));
  CHECK(a.state.theta(1) < 0.0);
  CHECK(b.state.theta(1) > 0.0);
  const double da = state_sensitivity(load, a, y)(1, 0);
  const double db = state_sensitivity(feed, b, y)(1, 0);
  CHECK(da * db < 0.0);
}

TEST_CASE("invalid powerflow arguments") {
  const Network& net = case5().network;
  CHECK_THROWS_AS(solve_powerflow(net, case5().y_true, GeneratorInput(Vector::Zero(2)), GridState::flat(net)),
                  DimensionMismatch);
  Vector bad = GridState::flat(net).values;
  bad[0] = 0.0;
  CHECK_THROWS_AS(solve_powerflow(net, case5().y_true, case5().u_nominal, GridState(bad)), InvalidArgument);
}
