#include "oedgrid/powerflow.hpp"

#include "oedgrid/errors.hpp"
#include "oedgrid/linalg.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace oedgrid {

namespace {

double mismatch(const Network& net, const Vector& x, const AdmittanceParams& y, const Vector& s) {
  for (int k = 1; k < net.n_buses(); ++k) {
    if (!(x[2 * (k - 1)] > 0.0)) return std::numeric_limits<double>::infinity();
  }
  const Vector r = power_residuum_all(net, GridState(x), y) - s;
  const double n = r.lpNorm<Eigen::Infinity>();
  return std::isfinite(n) ? n : std::numeric_limits<double>::infinity();
}

}  // namespace

PowerflowSolution solve_powerflow(const Network& net, const AdmittanceParams& y,
                                  const GeneratorInput& u, const GridState& x_init,
                                  const PowerflowOptions& options) {
  check_params(net, y);
  check_state(net, x_init);
  if (!(options.tol > 0.0)) throw InvalidArgument("powerflow tolerance must be positive");
  for (int k = 1; k < net.n_buses(); ++k) {
    if (!(x_init.v(k) > 0.0)) throw InvalidArgument("initial voltages must be positive");
  }

  const Vector s = net_supply(net, u);
  PowerflowSolution sol;
  Vector x = x_init.values;
  double norm = mismatch(net, x, y, s);
  sol.residual_history.push_back(norm);

  for (int it = 0;; ++it) {
    Matrix jac = jacobian_P_x(net, GridState(x), y);
    if (norm <= options.tol) {
      sol.state = GridState(std::move(x));
      sol.residual_norm = norm;
      sol.iterations = it;
      sol.jac_P_x = std::move(jac);
      return sol;
    }
    if (it >= options.max_iter) {
      throw NonConvergence("powerflow did not converge in " + std::to_string(options.max_iter) +
                           " iterations (residual " + std::to_string(norm) + ")");
    }
    const auto lu = factorize(jac);
    if (!lu) throw SingularJacobian("powerflow Jacobian is singular");
    const Vector r = power_residuum_all(net, GridState(x), y) - s;
    const Vector step = -lu->solve(r);

    double alpha = 1.0;
    Vector trial = x + step;
    double trial_norm = mismatch(net, trial, y, s);
    for (int h = 0; h < options.max_halvings && !(trial_norm < norm); ++h) {
      alpha *= 0.5;
      trial = x + alpha * step;
      trial_norm = mismatch(net, trial, y, s);
    }
    if (!std::isfinite(trial_norm)) {
      throw NonConvergence("powerflow line search left the valid voltage region");
    }
    if (!(trial_norm < norm)) {
      throw NonConvergence("powerflow line search failed to reduce the residual (" +
                           std::to_string(norm) + ")");
    }
    x = std::move(trial);
    norm = trial_norm;
    sol.residual_history.push_back(norm);
  }
}

Matrix state_sensitivity(const Network& net, const PowerflowSolution& solution,
                         const AdmittanceParams& y) {
  const auto lu = factorize(solution.jac_P_x);
  if (!lu) throw SingularJacobian("state Jacobian is singular");
  return -lu->solve(jacobian_P_y(net, solution.state, y));
}

Matrix input_sensitivity(const Network& net, const PowerflowSolution& solution) {
  const auto lu = factorize(solution.jac_P_x);
  if (!lu) throw SingularJacobian("state Jacobian is singular");
  return lu->solve(supply_input_jacobian(net));
}

}  // namespace oedgrid
