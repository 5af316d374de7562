#include "oedgrid/oed.hpp"

#include "oedgrid/dual.hpp"
#include "oedgrid/errors.hpp"
#include "oedgrid/flow_model.hpp"
#include "oedgrid/linalg.hpp"
#include "oedgrid/powerflow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace oedgrid {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class Expr>
Matrix tangent(const Expr& m) {
  return m.unaryExpr([](const Dual& d) { return d.der; });
}

// Log-squared barrier on the normalized margin t in (0, width]; zero beyond.
double barrier_term(double t, double width, double* derivative) {
  if (t >= width) {
    *derivative = 0.0;
    return 0.0;
  }
  const double l = std::log(t / width);
  *derivative = 2.0 * l / t;
  return l * l;
}

Vector project(const Vector& u, const Bounds& b) {
  if (b.u_lo.size() == 0) return u;
  return u.cwiseMax(b.u_lo).cwiseMin(b.u_hi);
}

double projected_gradient_norm(const Vector& u, const Vector& g, const Bounds& b) {
  return (u - project(u - g, b)).lpNorm<Eigen::Infinity>();
}

}  // namespace

double design_objective(const InformationModel& info, const Matrix& sensitivity, double rho,
                        const GeneratorInput& u, const GeneratorInput& u_minus) {
  if (u.size() != u_minus.size()) throw DimensionMismatch("input vectors differ in size");
  return info.fisher(sensitivity).total_variance + rho * (u.values - u_minus.values).squaredNorm();
}

double oed_objective(const Network& net, const GridState& x, const GeneratorInput& u,
                     const AdmittanceParams& y_minus, const Matrix& sigma, const Matrix& sigma0,
                     double rho, const GeneratorInput& u_minus) {
  check_input(net, u);
  check_input(net, u_minus);
  return design_objective(InformationModel(sigma, sigma0),
                          parameter_sensitivity(net, x, y_minus), rho, u, u_minus);
}

ReducedDesignProblem::ReducedDesignProblem(const Network& net, AdmittanceParams y_minus,
                                           const Matrix& sigma, const Matrix& sigma0,
                                           GeneratorInput u_minus, OedConfig config)
    : net_(net),
      y_minus_(std::move(y_minus)),
      info_(sigma, sigma0),
      u_minus_(std::move(u_minus)),
      config_(std::move(config)),
      bounds_(config_.bounds ? *config_.bounds : net.bounds()) {
  check_params(net_, y_minus_);
  check_input(net_, u_minus_);
  if (!(config_.rho >= 0.0)) throw InvalidArgument("rho must be nonnegative");
  if (info_.measurement_dim() != net_.measurement_dim() ||
      info_.prior_information().rows() != net_.param_dim()) {
    throw DimensionMismatch("covariances do not match the network");
  }
  if (bounds_.u_lo.size() != 0 && bounds_.u_lo.size() != net_.input_dim()) {
    throw DimensionMismatch("input bounds do not match the network");
  }
  if (bounds_.x_lo.size() != 0 && bounds_.x_lo.size() != net_.state_dim()) {
    throw DimensionMismatch("state bounds do not match the network");
  }
}

double ReducedDesignProblem::barrier_value(const GridState& x, Vector* dbarrier_dx) const {
  const int nx = net_.state_dim();
  double total = 0.0;
  if (dbarrier_dx) *dbarrier_dx = Vector::Zero(nx);
  const double width = config_.barrier_width;

  auto add = [&](double margin, double box, const Vector& dmargin_dx) {
    const double t = margin / box;
    if (!(t > 0.0)) {
      total = kInf;
      return;
    }
    double d = 0.0;
    total += barrier_term(t, width, &d);
    if (dbarrier_dx && d != 0.0) *dbarrier_dx += (d / box) * dmargin_dx;
  };

  if (bounds_.x_lo.size() > 0) {
    for (int i = 0; i < nx; ++i) {
      const double box = std::max(bounds_.x_hi[i] - bounds_.x_lo[i], 1e-12);
      const Vector e = Vector::Unit(nx, i);
      add(x.values[i] - bounds_.x_lo[i], box, e);
      add(bounds_.x_hi[i] - x.values[i], box, -e);
    }
  }

  const bool slack_bounded = bounds_.slack_lo.allFinite() || bounds_.slack_hi.allFinite();
  if (slack_bounded) {
    const auto e = detail::evaluate_flows<double>(net_, x.values, y_minus_.values, true);
    const double s[2] = {e.injection[0] + net_.p_demand()[0], e.injection[1] + net_.q_demand()[0]};
    for (int j = 0; j < 2; ++j) {
      const Vector ds = e.injection_dx.row(j).transpose();
      const double lo = bounds_.slack_lo[j];
      const double hi = bounds_.slack_hi[j];
      if (std::isfinite(lo) && std::isfinite(hi)) {
        const double box = std::max(hi - lo, 1e-12);
        add(s[j] - lo, box, ds);
        add(hi - s[j], box, -ds);
      } else if (std::isfinite(lo)) {
        add(s[j] - lo, 1.0, ds);
      } else if (std::isfinite(hi)) {
        add(hi - s[j], 1.0, -ds);
      }
    }
  }
  return barrier_mu_ * total;
}

ReducedDesignProblem::Evaluation ReducedDesignProblem::evaluate(const Vector& u,
                                                                const GridState& x_warm,
                                                                bool with_gradient) const {
  Evaluation e;
  PowerflowSolution pf;
  try {
    pf = solve_powerflow(net_, y_minus_, GeneratorInput(u), x_warm);
  } catch (const NumericalError&) {
    return e;
  }
  e.x = pf.state;
  if (barrier_mu_ == 0.0) {
    // Feasibility still has to be strict even without a barrier weight.
    const double probe = [&] {
      ReducedDesignProblem copy = *this;
      copy.barrier_mu_ = 1.0;
      return copy.barrier_value(e.x, nullptr);
    }();
    if (!std::isfinite(probe)) return e;
    e.barrier = 0.0;
  } else {
    e.barrier = barrier_value(e.x, nullptr);
    if (!std::isfinite(e.barrier)) return e;
  }

  try {
    const Matrix sens = parameter_sensitivity(net_, e.x, y_minus_);
    e.objective = info_.fisher(sens).total_variance +
                  config_.rho * (u - u_minus_.values).squaredNorm();
  } catch (const NumericalError&) {
    return e;
  }
  if (!std::isfinite(e.objective)) return e;
  e.merit = e.objective + e.barrier;
  e.feasible = true;

  if (with_gradient) {
    if (config_.gradient_mode == GradientMode::Analytic) {
      analytic_gradient(u, e);
    } else {
      finite_difference_gradient(u, e);
    }
  }
  return e;
}

void ReducedDesignProblem::analytic_gradient(const Vector& u, Evaluation& e) const {
  const int nx = net_.state_dim();
  const int nu = net_.input_dim();
  const int m = net_.measurement_dim();
  const int flow_rows = net_.param_dim();
  const auto flows = detail::evaluate_flows<double>(net_, e.x.values, y_minus_.values, true);
  const Matrix jac = flows.injection_dx.bottomRows(nx);
  const auto lu = factorize(jac);
  if (!lu) throw SingularJacobian("state Jacobian is singular in the design problem");

  const Matrix dxdy = -lu->solve(flows.injection_dy.bottomRows(nx));
  const Matrix dxdu = lu->solve(supply_input_jacobian(net_));

  // T^T = dM/dy + dM/dx dx/dy, with dM/dx = [I; flows_dx] and dM/dy = [0; flows_dy].
  Matrix sens = Matrix::Zero(m, net_.param_dim());
  sens.topRows(nx) = dxdy;
  sens.bottomRows(flow_rows) = flows.flows_dy + flows.flows_dx * dxdy;
  const FisherInfo fisher = info_.fisher(sens);
  const Matrix sens_w = info_.whiten(sens);
  const Matrix k = fisher.inverse * fisher.inverse;
  const Matrix sk = sens_w * k;

  detail::VecT<Dual> xd(nx);
  detail::VecT<Dual> yd(y_minus_.size());
  for (int i = 0; i < y_minus_.size(); ++i) yd[i] = Dual(y_minus_.values[i]);

  Vector trace_grad(nu);
  for (int j = 0; j < nu; ++j) {
    const Vector dx = dxdu.col(j);
    for (int i = 0; i < nx; ++i) xd[i] = Dual(e.x.values[i], dx[i]);
    const auto fd = detail::evaluate_flows<Dual>(net_, xd, yd, true);
    const Matrix djac = tangent(fd.injection_dx.bottomRows(nx));
    const Matrix dpy = tangent(fd.injection_dy.bottomRows(nx));
    const Matrix dflows_dx = tangent(fd.flows_dx);
    const Matrix dflows_dy = tangent(fd.flows_dy);

    const Matrix ddxdy = -lu->solve(djac * dxdy + dpy);
    Matrix dsens = Matrix::Zero(m, net_.param_dim());
    dsens.topRows(nx) = ddxdy;
    dsens.bottomRows(flow_rows) = dflows_dy + dflows_dx * dxdy + flows.flows_dx * ddxdy;
    // dTr(F^-1) = -Tr(F^-1 dF F^-1), dF = dW^T W + W^T dW with W = Sigma^{-1/2} T^T.
    trace_grad[j] = -2.0 * info_.whiten(dsens).cwiseProduct(sk).sum();
  }

  e.objective_gradient = trace_grad + 2.0 * config_.rho * (u - u_minus_.values);
  Vector dbarrier_dx;
  barrier_value(e.x, &dbarrier_dx);
  e.merit_gradient = e.objective_gradient + barrier_mu_ * dxdu.transpose() * dbarrier_dx;
}

void ReducedDesignProblem::finite_difference_gradient(const Vector& u, Evaluation& e) const {
  const int nu = net_.input_dim();
  e.objective_gradient = Vector::Zero(nu);
  e.merit_gradient = Vector::Zero(nu);
  for (int j = 0; j < nu; ++j) {
    const double h = config_.fd_step * std::max(1.0, std::abs(u[j]));
    Vector up = u;
    Vector um = u;
    up[j] += h;
    um[j] -= h;
    const Evaluation ep = evaluate(up, e.x, false);
    const Evaluation em = evaluate(um, e.x, false);
    if (!ep.feasible || !em.feasible) {
      throw NumericalError("finite-difference probe left the feasible region");
    }
    e.objective_gradient[j] = (ep.objective - em.objective) / (2.0 * h);
    e.merit_gradient[j] = (ep.merit - em.merit) / (2.0 * h);
  }
}

OedSolution solve_oed(const Network& net, const AdmittanceParams& y_minus, const Matrix& sigma,
                      const Matrix& sigma0, const GeneratorInput& u_minus,
                      const OedConfig& config) {
  ReducedDesignProblem problem(net, y_minus, sigma, sigma0, u_minus, config);
  const Bounds& bounds = problem.bounds();
  const int nu = net.input_dim();

  Vector u = u_minus.values;
  if (bounds.u_lo.size() > 0 &&
      ((u - bounds.u_lo).minCoeff() < -1e-12 || (bounds.u_hi - u).minCoeff() < -1e-12)) {
    throw InfeasibleStart("previous input violates the input bounds");
  }
  u = project(u, bounds);

  auto start = problem.evaluate(u, GridState::flat(net), false);
  bool restored = false;
  if (!start.feasible && config.restore_towards) {
    check_input(net, *config.restore_towards);
    const Vector target = project(config.restore_towards->values, bounds);
    auto hi = problem.evaluate(target, GridState::flat(net), false);
    if (hi.feasible) {
      double t_lo = 0.0;
      double t_hi = 1.0;
      for (int i = 0; i < config.restore_bisections; ++i) {
        const double t = 0.5 * (t_lo + t_hi);
        auto mid = problem.evaluate(u + t * (target - u), hi.x, false);
        if (mid.feasible) {
          t_hi = t;
          hi = std::move(mid);
        } else {
          t_lo = t;
        }
      }
      u = u + t_hi * (target - u);
      start = std::move(hi);
      restored = true;
    }
  }
  if (!start.feasible) {
    throw InfeasibleStart(
        "no strictly feasible power-flow solution at the previous input under the current "
        "estimate");
  }
  const Vector u_start = u;
  problem.set_barrier_scale(config.barrier_weight * std::max(start.objective, 1e-12));
  auto cur = problem.evaluate(u, start.x, true);
  const double start_objective = cur.objective;
  const GridState start_x = cur.x;

  auto scale_of = [](const ReducedDesignProblem::Evaluation& ev) {
    return std::max(1.0, std::abs(ev.merit));
  };

  // Hessian approximation of the merit, scaled so the first step has a modest length.
  const double initial_step = 0.1;
  auto fresh_hessian = [&](const Vector& g) {
    const double gn = std::max(g.lpNorm<Eigen::Infinity>(), 1e-300);
    return Matrix(Matrix::Identity(nu, nu) * (gn / initial_step));
  };
  Matrix hess = fresh_hessian(cur.merit_gradient);
  bool hessian_updated = false;

  OedSolution sol;
  int it = 0;
  double kkt = projected_gradient_norm(u, cur.merit_gradient / scale_of(cur), bounds);
  for (; it < config.max_iter && kkt > config.kkt_tol; ++it) {
    const Vector& g = cur.merit_gradient;

    std::vector<int> free;
    for (int i = 0; i < nu; ++i) {
      const bool at_lo = bounds.u_lo.size() > 0 && u[i] <= bounds.u_lo[i] && g[i] > 0.0;
      const bool at_hi = bounds.u_hi.size() > 0 && u[i] >= bounds.u_hi[i] && g[i] < 0.0;
      if (!at_lo && !at_hi) free.push_back(i);
    }

    bool stepped = false;
    for (int attempt = 0; attempt < 2 && !stepped; ++attempt) {
      Vector d = Vector::Zero(nu);
      if (!free.empty()) {
        const int nf = static_cast<int>(free.size());
        Matrix hf(nf, nf);
        Vector gf(nf);
        for (int a = 0; a < nf; ++a) {
          gf[a] = g[free[a]];
          for (int b = 0; b < nf; ++b) hf(a, b) = hess(free[a], free[b]);
        }
        const Vector df = -hf.ldlt().solve(gf);
        for (int a = 0; a < nf; ++a) d[free[a]] = df[a];
      }
      if (!(g.dot(d) < 0.0) || !d.allFinite()) {
        hess = fresh_hessian(g);
        hessian_updated = false;
        continue;
      }

      double alpha = 1.0;
      for (int h = 0; h < 40; ++h, alpha *= 0.5) {
        const Vector trial = project(u + alpha * d, bounds);
        const Vector step = trial - u;
        if (step.lpNorm<Eigen::Infinity>() == 0.0) break;
        auto next = problem.evaluate(trial, cur.x, false);
        if (!next.feasible || !(next.merit <= cur.merit + 1e-4 * g.dot(step))) continue;
        next = problem.evaluate(trial, cur.x, true);

        // Damped BFGS update on the merit.
        const Vector yk = next.merit_gradient - g;
        const Vector bs = hess * step;
        const double sbs = step.dot(bs);
        double sy = step.dot(yk);
        Vector r = yk;
        if (sy < 0.2 * sbs) {
          const double theta = 0.8 * sbs / (sbs - sy);
          r = theta * yk + (1.0 - theta) * bs;
          sy = step.dot(r);
        }
        if (sbs > 0.0 && sy > 0.0) {
          if (!hessian_updated) {
            hess *= r.squaredNorm() / sy / (hess(0, 0) > 0 ? hess(0, 0) : 1.0);
            hessian_updated = true;
          }
          const Vector bs2 = hess * step;
          hess += (r * r.transpose()) / sy - (bs2 * bs2.transpose()) / step.dot(bs2);
        }
        u = trial;
        cur = std::move(next);
        stepped = true;
        break;
      }
      if (!stepped) {
        hess = fresh_hessian(g);
        hessian_updated = false;
      }
    }
    if (!stepped) break;
    kkt = projected_gradient_norm(u, cur.merit_gradient / scale_of(cur), bounds);
  }

  sol.kkt_residual = kkt;
  sol.iterations = it;
  sol.converged = kkt <= config.kkt_tol;
  sol.restored = restored;
  if (cur.objective <= start_objective) {
    sol.u = GeneratorInput(u);
    sol.x = cur.x;
    sol.objective = cur.objective;
  } else {
    sol.u = GeneratorInput(u_start);
    sol.x = start_x;
    sol.objective = start_objective;
  }
  return sol;
}

}  // namespace oedgrid
