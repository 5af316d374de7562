#pragma once

#include "oedgrid/grid_model.hpp"

#include <Eigen/Cholesky>

#include <utility>
#include <vector>

namespace oedgrid {

struct Prior {
  AdmittanceParams mean;  // y^-
  Matrix covariance;      // Sigma_0, SPD, param_dim x param_dim
};

struct MleOptions {
  double tol = 1e-8;             // stationarity, see MleSolution::kkt_residual
  double constraint_tol = 1e-8;  // max-norm of P(x, y) - S(u)
  // Also converged once the Gauss-Newton step falls below this, relative to |z|.
  double step_tol = 1e-12;
  int max_iter = 100;
  int max_halvings = 30;
  // Scales the measurement term of the objective; 0 leaves only the prior.
  double measurement_weight = 1.0;
};

struct MleSolution {
  GridState x;
  AdmittanceParams y;
  double objective = 0.0;
  // Max-norm of grad f + C^T lambda with least-squares multipliers, relative to
  // max(1, max-norm of grad f).
  double kkt_residual = 0.0;
  double constraint_residual = 0.0;
  int iterations = 0;
  // (merit before, merit after) for every accepted step, same penalty weight.
  std::vector<std::pair<double, double>> merit_steps;
};

//   min_{x,y} 1/2 |M(x,y) - eta|^2_{Sigma^-1} + 1/2 |y - y^-|^2_{Sigma_0^-1}
//   s.t.      P(x,y) = S(u)
// Equality-constrained Gauss-Newton with an l1 merit function and step halving.
// Throws NonConvergence or SingularKktSystem.
MleSolution solve_mle(const Network& net, const Vector& eta, const GeneratorInput& u,
                      const Prior& prior, const Matrix& sigma, const GridState& x0,
                      const AdmittanceParams& y0, const MleOptions& options = {});

double mle_objective(const Network& net, const Vector& eta, const Prior& prior,
                     const Matrix& sigma, const GridState& x, const AdmittanceParams& y,
                     double measurement_weight = 1.0);

// Gradient of mle_objective with respect to (x, y), stacked.
Vector mle_objective_gradient(const Network& net, const Vector& eta, const Prior& prior,
                              const Matrix& sigma, const GridState& x, const AdmittanceParams& y,
                              double measurement_weight = 1.0);

// One measured snapshot: the input applied and the measurement taken.
struct Snapshot {
  GeneratorInput u;
  Vector eta;
};

struct BatchMleOptions {
  double tol = 1e-10;  // relative step size
  int max_iter = 50;
  int max_halvings = 30;
};

struct BatchMleSolution {
  AdmittanceParams y;
  std::vector<GridState> x;  // power-flow state of each snapshot at y
  double objective = 0.0;
  int iterations = 0;
};

//   min_y  sum_j 1/2 |M(x*(y, u_j), y) - eta_j|^2_{Sigma^-1} + 1/2 |y - y^-|^2_{Sigma_0^-1}
// over all snapshots, with the states eliminated by power-flow solves. Reduced-space
// Gauss-Newton with step halving, started at y0; x_warm holds one warm start per
// snapshot. Throws NonConvergence when the power flow fails at y0.
BatchMleSolution solve_batch_mle(const Network& net, const std::vector<Snapshot>& snapshots,
                                 const Prior& prior, const Matrix& sigma,
                                 const AdmittanceParams& y0, const std::vector<GridState>& x_warm,
                                 const BatchMleOptions& options = {});

struct FisherInfo {
  Matrix matrix;   // F = Sigma_0^-1 + T Sigma^-1 T^T
  Matrix inverse;  // F^-1, symmetrized
  double total_variance = 0.0;  // Tr(F^-1)
};

// Total derivative of the measurements with respect to y along the power-flow
// manifold: dM/dy + dM/dx dx*/dy, an m x param_dim matrix (T^T).
Matrix parameter_sensitivity(const Network& net, const GridState& x, const AdmittanceParams& y);

// Sigma and Sigma_0 factored once, for repeated Fisher evaluations.
class InformationModel {
 public:
  InformationModel(const Matrix& sigma, const Matrix& sigma0);
  // Prior given directly as Sigma_0^-1, e.g. the previous Fisher matrix.
  static InformationModel from_information(const Matrix& sigma, const Matrix& prior_information);

  // Fisher information from T^T (m x param_dim). A zero sensitivity gives F = Sigma_0^-1.
  FisherInfo fisher(const Matrix& sensitivity) const;
  // Sigma^{-1/2} applied from the left: L^{-1} a with Sigma = L L^T.
  Matrix whiten(const Matrix& a) const;
  const Matrix& prior_information() const noexcept { return prior_information_; }
  int measurement_dim() const noexcept { return static_cast<int>(sigma_factor_.rows()); }

 private:
  Eigen::LLT<Matrix> sigma_llt_;
  Matrix sigma_factor_;
  Matrix prior_information_;
};

FisherInfo fisher_information(const Network& net, const GridState& x, const AdmittanceParams& y,
                              const Matrix& sigma, const Matrix& sigma0);

struct RelativeErrors {
  double g = 0.0;
  double b = 0.0;
};

// Mean relative error of conductances and susceptances against the truth.
RelativeErrors mre(const AdmittanceParams& y, const AdmittanceParams& y_true);

// |y_i - ytrue_i| / |ytrue_i| componentwise.
Vector relative_errors(const AdmittanceParams& y, const AdmittanceParams& y_true);

}  // namespace oedgrid
