#include "oedgrid/estimator.hpp"

#include "oedgrid/errors.hpp"
#include "oedgrid/flow_model.hpp"
#include "oedgrid/linalg.hpp"
#include "oedgrid/measurement.hpp"
#include "oedgrid/powerflow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace oedgrid {

namespace {

// Whitened least-squares residual r and Jacobian A over z = (x, y), plus the
// power-flow constraint c = P - S and its Jacobian C.
struct Linearization {
  Vector r;
  Matrix a;
  Vector c;
  Matrix jc;
};

class MleProblem {
 public:
  MleProblem(const Network& net, const Vector& eta, const GeneratorInput& u, const Prior& prior,
             const Matrix& sigma, double weight)
      : net_(net), eta_(eta), prior_(prior), weight_(std::sqrt(weight)) {
    const int m = net.measurement_dim();
    const int ny = net.param_dim();
    if (eta.size() != m) throw DimensionMismatch("measurement vector has the wrong dimension");
    if (sigma.rows() != m || sigma.cols() != m) {
      throw DimensionMismatch("measurement covariance has the wrong dimension");
    }
    check_params(net, prior.mean);
    if (prior.covariance.rows() != ny || prior.covariance.cols() != ny) {
      throw DimensionMismatch("prior covariance has the wrong dimension");
    }
    if (!(weight >= 0.0)) throw InvalidArgument("measurement weight must be nonnegative");
    auto ls = cholesky(sigma);
    if (!ls) throw InvalidArgument("measurement covariance is not positive definite");
    auto lp = cholesky(prior.covariance);
    if (!lp) throw InvalidArgument("prior covariance is not positive definite");
    sigma_l_ = ls->matrixL();
    prior_l_ = lp->matrixL();
    supply_ = net_supply(net, u);
  }

  int nx() const { return net_.state_dim(); }
  int ny() const { return net_.param_dim(); }

  Vector residual(const Vector& z) const {
    const GridState x(z.head(nx()));
    const AdmittanceParams y(z.tail(ny()));
    const int m = net_.measurement_dim();
    Vector r(m + ny());
    r.head(m) = weight_ * sigma_l_.triangularView<Eigen::Lower>().solve(
                              measurement_function(net_, x, y) - eta_);
    r.tail(ny()) = prior_l_.triangularView<Eigen::Lower>().solve(y.values - prior_.mean.values);
    return r;
  }

  Vector constraint(const Vector& z) const {
    return power_residuum_all(net_, GridState(z.head(nx())), AdmittanceParams(z.tail(ny()))) -
           supply_;
  }

  Linearization linearize(const Vector& z) const {
    const GridState x(z.head(nx()));
    const AdmittanceParams y(z.tail(ny()));
    const int m = net_.measurement_dim();
    const auto e = detail::evaluate_flows<double>(net_, x.values, y.values, true);
    const auto mj = measurement_jacobians(net_, x, y);

    Linearization lin;
    lin.r = residual(z);
    lin.a = Matrix::Zero(m + ny(), nx() + ny());
    Matrix jm(m, nx() + ny());
    jm << mj.dx, mj.dy;
    lin.a.topRows(m) = weight_ * sigma_l_.triangularView<Eigen::Lower>().solve(jm);
    lin.a.bottomRightCorner(ny(), ny()) =
        prior_l_.triangularView<Eigen::Lower>().solve(Matrix::Identity(ny(), ny()));
    lin.c = e.injection.tail(nx()) - supply_;
    lin.jc.resize(nx(), nx() + ny());
    lin.jc << e.injection_dx.bottomRows(nx()), e.injection_dy.bottomRows(nx());
    return lin;
  }

 private:
  const Network& net_;
  const Vector& eta_;
  const Prior& prior_;
  double weight_;
  Matrix sigma_l_;
  Matrix prior_l_;
  Vector supply_;
};

bool valid_voltages(const Network& net, const Vector& z) {
  for (int k = 1; k < net.n_buses(); ++k) {
    if (!(z[2 * (k - 1)] > 0.0)) return false;
  }
  return z.allFinite();
}

// Stationarity of the Lagrangian with least-squares multipliers.
double stationarity(const Vector& grad, const Matrix& jc) {
  const Matrix cct = jc * jc.transpose();
  const Vector lambda = -cct.ldlt().solve(jc * grad);
  const Vector g = grad + jc.transpose() * lambda;
  return g.lpNorm<Eigen::Infinity>() / std::max(1.0, grad.lpNorm<Eigen::Infinity>());
}

}  // namespace

MleSolution solve_mle(const Network& net, const Vector& eta, const GeneratorInput& u,
                      const Prior& prior, const Matrix& sigma, const GridState& x0,
                      const AdmittanceParams& y0, const MleOptions& options) {
  check_input(net, u);
  check_state(net, x0);
  check_params(net, y0);
  MleProblem problem(net, eta, u, prior, sigma, options.measurement_weight);
  const int nx = net.state_dim();
  const int ny = net.param_dim();
  const int nz = nx + ny;

  Vector z(nz);
  z << x0.values, y0.values;
  if (!valid_voltages(net, z)) throw InvalidArgument("initial voltages must be positive");

  double penalty = 1.0;
  bool stalled = false;  // last Gauss-Newton step at roundoff level
  MleSolution sol;
  for (int it = 0;; ++it) {
    const Linearization lin = problem.linearize(z);
    const Vector grad = lin.a.transpose() * lin.r;
    const double objective = 0.5 * lin.r.squaredNorm();
    const double c_norm = lin.c.lpNorm<Eigen::Infinity>();
    const double stat = stationarity(grad, lin.jc);

    if ((stat <= options.tol || stalled) && c_norm <= options.constraint_tol) {
      sol.x = GridState(z.head(nx));
      sol.y = AdmittanceParams(z.tail(ny));
      sol.objective = objective;
      sol.kkt_residual = stat;
      sol.constraint_residual = c_norm;
      sol.iterations = it;
      return sol;
    }
    if (it >= options.max_iter) {
      throw NonConvergence("MLE did not converge in " + std::to_string(options.max_iter) +
                           " iterations (stationarity " + std::to_string(stat) +
                           ", constraint " + std::to_string(c_norm) + ")");
    }

    Matrix kkt = Matrix::Zero(nz + nx, nz + nx);
    kkt.topLeftCorner(nz, nz) = lin.a.transpose() * lin.a;
    kkt.topRightCorner(nz, nx) = lin.jc.transpose();
    kkt.bottomLeftCorner(nx, nz) = lin.jc;
    Vector rhs(nz + nx);
    rhs << -grad, -lin.c;
    const Vector d = equilibrate(kkt);
    const auto lu = factorize(d.asDiagonal() * kkt * d.asDiagonal(), 1e-15);
    if (!lu) throw SingularKktSystem("MLE KKT system is singular (locally unobservable)");
    const Vector sol_kkt = d.cwiseProduct(lu->solve(d.cwiseProduct(rhs)));
    const Vector dz = sol_kkt.head(nz);
    const Vector lambda = sol_kkt.tail(nx);
    stalled = dz.lpNorm<Eigen::Infinity>() <= options.step_tol * (1.0 + z.lpNorm<Eigen::Infinity>());

    penalty = std::max(penalty, 2.0 * lambda.lpNorm<Eigen::Infinity>());
    const double merit = objective + penalty * lin.c.lpNorm<1>();
    const double slope = grad.dot(dz) - penalty * lin.c.lpNorm<1>();

    double alpha = 1.0;
    bool accepted = false;
    for (int h = 0; h <= options.max_halvings; ++h, alpha *= 0.5) {
      const Vector trial = z + alpha * dz;
      if (!valid_voltages(net, trial)) continue;
      const double trial_merit = 0.5 * problem.residual(trial).squaredNorm() +
                                 penalty * problem.constraint(trial).lpNorm<1>();
      if (std::isfinite(trial_merit) &&
          trial_merit <= merit + 1e-4 * alpha * std::min(slope, 0.0)) {
        z = trial;
        sol.merit_steps.emplace_back(merit, trial_merit);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      throw NonConvergence("MLE line search failed (stationarity " + std::to_string(stat) +
                           ", constraint " + std::to_string(c_norm) + ")");
    }
  }
}

double mle_objective(const Network& net, const Vector& eta, const Prior& prior,
                     const Matrix& sigma, const GridState& x, const AdmittanceParams& y,
                     double measurement_weight) {
  GeneratorInput none(Vector::Zero(net.input_dim()));
  MleProblem problem(net, eta, none, prior, sigma, measurement_weight);
  Vector z(net.state_dim() + net.param_dim());
  z << x.values, y.values;
  return 0.5 * problem.residual(z).squaredNorm();
}

Vector mle_objective_gradient(const Network& net, const Vector& eta, const Prior& prior,
                              const Matrix& sigma, const GridState& x, const AdmittanceParams& y,
                              double measurement_weight) {
  GeneratorInput none(Vector::Zero(net.input_dim()));
  MleProblem problem(net, eta, none, prior, sigma, measurement_weight);
  Vector z(net.state_dim() + net.param_dim());
  z << x.values, y.values;
  const Linearization lin = problem.linearize(z);
  return lin.a.transpose() * lin.r;
}

Matrix parameter_sensitivity(const Network& net, const GridState& x, const AdmittanceParams& y) {
  check_state(net, x);
  check_params(net, y);
  const auto e = detail::evaluate_flows<double>(net, x.values, y.values, true);
  const int nx = net.state_dim();
  const auto lu = factorize(e.injection_dx.bottomRows(nx));
  if (!lu) throw SingularJacobian("state Jacobian is singular");
  const Matrix dxdy = -lu->solve(e.injection_dy.bottomRows(nx));
  const auto mj = measurement_jacobians(net, x, y);
  return mj.dy + mj.dx * dxdy;
}

namespace {

struct BatchPoint {
  bool feasible = false;
  std::vector<GridState> x;
  double objective = 0.0;
  Matrix normal;  // J^T J + prior information
  Vector gradient;
};

class BatchProblem {
 public:
  BatchProblem(const Network& net, const std::vector<Snapshot>& snapshots, const Prior& prior,
               const Matrix& sigma)
      : net_(net), snapshots_(snapshots), prior_(prior) {
    check_params(net, prior.mean);
    const int m = net.measurement_dim();
    if (sigma.rows() != m || sigma.cols() != m) {
      throw DimensionMismatch("measurement covariance does not match the network");
    }
    for (const auto& s : snapshots) {
      check_input(net, s.u);
      if (s.eta.size() != m) throw DimensionMismatch("measurement vector has the wrong length");
    }
    auto llt = cholesky(sigma);
    if (!llt) throw InvalidArgument("measurement covariance is not positive definite");
    factor_ = llt->matrixL();
    auto info = spd_inverse(prior.covariance);
    if (!info) throw InvalidArgument("prior covariance is not positive definite");
    prior_information_ = std::move(*info);
  }

  BatchPoint evaluate(const Vector& y, const std::vector<GridState>& warm, bool with_derivatives) const {
    BatchPoint pt;
    const AdmittanceParams params(y);
    const Vector dy = y - prior_.mean.values;
    pt.objective = 0.5 * dy.dot(prior_information_ * dy);
    if (with_derivatives) {
      pt.normal = prior_information_;
      pt.gradient = prior_information_ * dy;
    }
    for (std::size_t j = 0; j < snapshots_.size(); ++j) {
      PowerflowSolution pf;
      try {
        pf = solve_powerflow(net_, params, snapshots_[j].u, warm[j]);
      } catch (const NumericalError&) {
        return pt;
      }
      const Vector r = factor_.triangularView<Eigen::Lower>().solve(
          measurement_function(net_, pf.state, params) - snapshots_[j].eta);
      pt.objective += 0.5 * r.squaredNorm();
      if (with_derivatives) {
        Matrix jac;
        try {
          jac = factor_.triangularView<Eigen::Lower>().solve(
              parameter_sensitivity(net_, pf.state, params));
        } catch (const NumericalError&) {
          return pt;
        }
        pt.normal.noalias() += jac.transpose() * jac;
        pt.gradient.noalias() += jac.transpose() * r;
      }
      pt.x.push_back(std::move(pf.state));
    }
    pt.feasible = std::isfinite(pt.objective);
    return pt;
  }

 private:
  const Network& net_;
  const std::vector<Snapshot>& snapshots_;
  const Prior& prior_;
  Matrix factor_;
  Matrix prior_information_;
};

}  // namespace

BatchMleSolution solve_batch_mle(const Network& net, const std::vector<Snapshot>& snapshots,
                                 const Prior& prior, const Matrix& sigma,
                                 const AdmittanceParams& y0, const std::vector<GridState>& x_warm,
                                 const BatchMleOptions& options) {
  check_params(net, y0);
  if (x_warm.size() != snapshots.size()) {
    throw DimensionMismatch("one warm start per snapshot is required");
  }
  for (const auto& x : x_warm) check_state(net, x);
  BatchProblem problem(net, snapshots, prior, sigma);

  Vector y = y0.values;
  BatchPoint cur = problem.evaluate(y, x_warm, true);
  if (!cur.feasible) throw NonConvergence("power flow has no solution at the starting parameters");

  BatchMleSolution sol;
  int it = 0;
  for (; it < options.max_iter; ++it) {
    auto llt = cholesky(cur.normal);
    if (!llt) throw SingularKktSystem("batch normal equations are not positive definite");
    const Vector step = -llt->solve(cur.gradient);
    const double slope = cur.gradient.dot(step);
    if (!(slope < 0.0)) break;

    double alpha = 1.0;
    bool accepted = false;
    for (int h = 0; h <= options.max_halvings; ++h, alpha *= 0.5) {
      const Vector trial = y + alpha * step;
      BatchPoint next = problem.evaluate(trial, cur.x, false);
      if (!next.feasible || !(next.objective <= cur.objective + 1e-4 * alpha * slope)) continue;
      y = trial;
      cur = problem.evaluate(y, next.x, true);
      if (!cur.feasible) throw NonConvergence("batch estimate lost its power-flow solution");
      accepted = true;
      break;
    }
    if (!accepted) break;
    if (alpha * step.lpNorm<Eigen::Infinity>() <= options.tol * (1.0 + y.lpNorm<Eigen::Infinity>())) {
      ++it;
      break;
    }
  }
  sol.y = AdmittanceParams(y);
  sol.x = std::move(cur.x);
  sol.objective = cur.objective;
  sol.iterations = it;
  return sol;
}

InformationModel::InformationModel(const Matrix& sigma, const Matrix& sigma0) {
  if (sigma.rows() != sigma.cols() || sigma0.rows() != sigma0.cols()) {
    throw DimensionMismatch("covariances must be square");
  }
  sigma_llt_.compute(sigma);
  if (sigma_llt_.info() != Eigen::Success) {
    throw InvalidArgument("measurement covariance is not positive definite");
  }
  sigma_factor_ = sigma_llt_.matrixL();
  auto inv = spd_inverse(sigma0);
  if (!inv) throw InvalidArgument("prior covariance is not positive definite");
  prior_information_ = std::move(*inv);
}

InformationModel InformationModel::from_information(const Matrix& sigma,
                                                    const Matrix& prior_information) {
  if (prior_information.rows() != prior_information.cols()) {
    throw DimensionMismatch("prior information must be square");
  }
  if (!cholesky(prior_information)) {
    throw InvalidArgument("prior information is not positive definite");
  }
  InformationModel m(sigma, Matrix::Identity(prior_information.rows(), prior_information.cols()));
  m.prior_information_ = prior_information;
  return m;
}

Matrix InformationModel::whiten(const Matrix& a) const {
  return sigma_factor_.triangularView<Eigen::Lower>().solve(a);
}

FisherInfo InformationModel::fisher(const Matrix& sensitivity) const {
  if (sensitivity.rows() != sigma_factor_.rows() ||
      sensitivity.cols() != prior_information_.rows()) {
    throw DimensionMismatch("sensitivity does not match the covariance dimensions");
  }
  const Matrix w = whiten(sensitivity);
  FisherInfo info;
  info.matrix = prior_information_ + w.transpose() * w;
  info.matrix = 0.5 * (info.matrix + info.matrix.transpose()).eval();
  auto inv = spd_inverse(info.matrix);
  if (!inv) throw NumericalError("Fisher information is not positive definite");
  info.inverse = std::move(*inv);
  info.total_variance = info.inverse.trace();
  return info;
}

FisherInfo fisher_information(const Network& net, const GridState& x, const AdmittanceParams& y,
                              const Matrix& sigma, const Matrix& sigma0) {
  return InformationModel(sigma, sigma0).fisher(parameter_sensitivity(net, x, y));
}

Vector relative_errors(const AdmittanceParams& y, const AdmittanceParams& y_true) {
  if (y.size() != y_true.size()) throw DimensionMismatch("parameter vectors differ in size");
  Vector e(y.size());
  for (int i = 0; i < y.size(); ++i) {
    if (y_true.values[i] == 0.0) {
      throw InvalidArgument("relative error undefined: true parameter " + std::to_string(i) +
                            " is zero");
    }
    e[i] = std::abs(y.values[i] - y_true.values[i]) / std::abs(y_true.values[i]);
  }
  return e;
}

RelativeErrors mre(const AdmittanceParams& y, const AdmittanceParams& y_true) {
  const Vector e = relative_errors(y, y_true);
  RelativeErrors out;
  const int lines = static_cast<int>(e.size() / 2);
  if (lines == 0) return out;
  for (int i = 0; i < lines; ++i) {
    out.g += e[2 * i];
    out.b += e[2 * i + 1];
  }
  out.g /= lines;
  out.b /= lines;
  return out;
}

}  // namespace oedgrid
