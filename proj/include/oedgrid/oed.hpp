#pragma once

// A-optimal experiment design over the generator set-points:
//
//   min_u  Tr(F(x*(u), y^-, u)^{-1}) + rho |u - u^-|^2
//   s.t.   P(x, y^-) = S(u),  u_lo <= u <= u_hi,  x_lo <= x <= x_hi,
//          slack_lo <= P_0(x, y^-) + demand_0 <= slack_hi
//
// The state is eliminated by a power-flow solve continued from u^-. The u box is
// handled by projection; the state and slack boxes by a log-squared barrier that
// only switches on within `barrier_width` (fraction of the box width) of a bound.

#include "oedgrid/estimator.hpp"
#include "oedgrid/grid_model.hpp"

#include <optional>

namespace oedgrid {

enum class GradientMode { Analytic, FiniteDifference };

struct OedConfig {
  double rho = 8e-4;
  std::optional<Bounds> bounds;  // network bounds when empty
  double kkt_tol = 1e-6;
  int max_iter = 200;
  GradientMode gradient_mode = GradientMode::Analytic;
  double barrier_weight = 1e-6;  // times the objective at u^-
  double barrier_width = 0.02;
  double fd_step = 1e-6;
  // When u^- is infeasible at y^-, the search starts from the first feasible point
  // on the segment from u^- towards this input (bisection on the step).
  std::optional<GeneratorInput> restore_towards;
  int restore_bisections = 30;
};

struct OedSolution {
  GeneratorInput u;
  GridState x;
  double objective = 0.0;  // trace + regularizer, barrier excluded
  // Max-norm of the projected gradient step u - proj(u - grad/scale), with
  // scale = max(1, |merit|).
  double kkt_residual = 0.0;
  int iterations = 0;
  bool converged = false;  // false: best feasible iterate returned
  bool restored = false;   // started from a restored point instead of u^-
};

// Trace + regularizer for a given sensitivity T^T (m x param_dim).
double design_objective(const InformationModel& info, const Matrix& sensitivity, double rho,
                        const GeneratorInput& u, const GeneratorInput& u_minus);

// Design objective at a state x; x is taken as given (not re-solved).
double oed_objective(const Network& net, const GridState& x, const GeneratorInput& u,
                     const AdmittanceParams& y_minus, const Matrix& sigma, const Matrix& sigma0,
                     double rho, const GeneratorInput& u_minus);

// The design problem with the state eliminated.
class ReducedDesignProblem {
 public:
  ReducedDesignProblem(const Network& net, AdmittanceParams y_minus, const Matrix& sigma,
                       const Matrix& sigma0, GeneratorInput u_minus, OedConfig config);

  struct Evaluation {
    bool feasible = false;
    GridState x;
    double objective = 0.0;  // trace + regularizer
    double barrier = 0.0;
    double merit = 0.0;       // objective + barrier
    Vector objective_gradient;  // filled when requested
    Vector merit_gradient;
  };

  // Solves the power flow from x_warm; infeasible when it fails or a state/slack
  // bound is not strictly satisfied.
  Evaluation evaluate(const Vector& u, const GridState& x_warm, bool with_gradient) const;

  // Barrier weight mu; solve() sets it from the objective at u^-.
  void set_barrier_scale(double mu) { barrier_mu_ = mu; }

  const Bounds& bounds() const noexcept { return bounds_; }
  const GeneratorInput& u_minus() const noexcept { return u_minus_; }
  const OedConfig& config() const noexcept { return config_; }

 private:
  void analytic_gradient(const Vector& u, Evaluation& e) const;
  void finite_difference_gradient(const Vector& u, Evaluation& e) const;
  double barrier_value(const GridState& x, Vector* dbarrier_dx) const;

  const Network& net_;
  AdmittanceParams y_minus_;
  InformationModel info_;
  GeneratorInput u_minus_;
  OedConfig config_;
  Bounds bounds_;
  double barrier_mu_ = 0.0;
};

// Projected BFGS on the reduced problem, started at u^- (or at the restored point,
// see OedConfig::restore_towards). Throws InfeasibleStart when u^- violates the
// input box or no feasible start is found. Never returns a point with a larger
// objective than the start.
OedSolution solve_oed(const Network& net, const AdmittanceParams& y_minus, const Matrix& sigma,
                      const Matrix& sigma0, const GeneratorInput& u_minus,
                      const OedConfig& config = {});

// Constant-input policy: the first designed input, reused unchanged.
inline GeneratorInput baseline_input(const OedSolution& first) { return first.u; }

}  // namespace oedgrid
