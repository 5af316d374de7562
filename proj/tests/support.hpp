#pragma once

#include "oedgrid/case_io.hpp"
#include "oedgrid/grid_model.hpp"
#include "oedgrid/powerflow.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>

namespace testing {

using namespace oedgrid;

inline std::string data_path(const std::string& name) { return std::string(OEDGRID_DATA_DIR) + "/" + name; }

inline const CaseProblem& case5() {
  static const CaseProblem p = load_problem(data_path("case5.m"));
  return p;
}

// Solved operating point of case 5 at the true admittances and nominal dispatch.
inline const PowerflowSolution& case5_solution() {
  static const PowerflowSolution s = solve_powerflow(case5().network, case5().y_true,
                                                     case5().u_nominal, GridState::flat(case5().network));
  return s;
}

// Random state near the flat profile: v in [0.9, 1.1], theta in [-0.3, 0.3].
inline GridState random_state(const Network& net, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> v(0.9, 1.1), th(-0.3, 0.3);
  Vector x(net.state_dim());
  for (int i = 0; i < net.n_buses() - 1; ++i) {
    x[2 * i] = v(rng);
    x[2 * i + 1] = th(rng);
  }
  return GridState(x);
}

// Admittances scaled from the truth by factors in [0.5, 1.5].
inline AdmittanceParams random_params(const AdmittanceParams& base, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> f(0.5, 1.5);
  Vector y = base.values;
  for (int i = 0; i < y.size(); ++i) y[i] *= f(rng);
  return AdmittanceParams(y);
}

// Central differences of a vector function, one column per coordinate.
inline Matrix central_difference(const std::function<Vector(const Vector&)>& f, const Vector& at,
                                 double h = 1e-6) {
  const Vector f0 = f(at);
  Matrix j(f0.size(), at.size());
  for (int c = 0; c < at.size(); ++c) {
    Vector p = at, m = at;
    p[c] += h;
    m[c] -= h;
    j.col(c) = (f(p) - f(m)) / (2.0 * h);
  }
  return j;
}

// max |a - b| / max(1, max |b|), a scale-aware relative error for whole matrices.
inline double rel_error(const Matrix& a, const Matrix& b) {
  const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

}  // namespace testing
