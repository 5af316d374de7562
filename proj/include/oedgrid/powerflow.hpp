#pragma once

#include "oedgrid/grid_model.hpp"

#include <vector>

namespace oedgrid {

struct PowerflowOptions {
  double tol = 1e-10;
  int max_iter = 50;
  int max_halvings = 10;
};

struct PowerflowSolution {
  GridState state;
  double residual_norm = 0.0;  // max-norm of P(x, y) - S(u)
  int iterations = 0;
  Matrix jac_P_x;  // at the solution
  std::vector<double> residual_history;  // one entry per Newton iterate, starting point first
};

// Newton's method on P(x, y) = S(u) with a halving line search on the residual
// max-norm. Throws NonConvergence or SingularJacobian.
PowerflowSolution solve_powerflow(const Network& net, const AdmittanceParams& y,
                                  const GeneratorInput& u, const GridState& x_init,
                                  const PowerflowOptions& options = {});

// dx*/dy = -[dP/dx]^{-1} dP/dy at the solution.
Matrix state_sensitivity(const Network& net, const PowerflowSolution& solution,
                         const AdmittanceParams& y);

// dx*/du = [dP/dx]^{-1} dS/du at the solution.
Matrix input_sensitivity(const Network& net, const PowerflowSolution& solution);

}  // namespace oedgrid
