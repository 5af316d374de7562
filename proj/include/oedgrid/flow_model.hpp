#pragma once

// Scalar-generic evaluation of line flows, nodal residua and their first
// derivatives. Instantiated with double for values and Jacobians, and with Dual
// to obtain exact directional derivatives of those Jacobians.

#include "oedgrid/dual.hpp"
#include "oedgrid/grid_model.hpp"

#include <array>
#include <cmath>

namespace oedgrid::detail {

template <class T>
using VecT = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <class T>
using MatT = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

// Flow out of bus k towards bus l, with partials ordered (v_k, th_k, v_l, th_l, g, b).
template <class T>
struct BranchFlow {
  T p, q;
  std::array<T, 6> dp, dq;
};

template <class T>
BranchFlow<T> branch_flow(const T& vk, const T& thk, const T& vl, const T& thl, const T& g,
                          const T& b) {
  using std::cos;
  using std::sin;
  const T c = cos(thk - thl);
  const T s = sin(thk - thl);
  const T vv = vk * vl;
  const T vk2 = vk * vk;
  const T active = g * c + b * s;    // d/d(delta) = reactive
  const T reactive = b * c - g * s;  // d/d(delta) = -active
  BranchFlow<T> f;
  f.p = vk2 * g - vv * active;
  f.q = -(vk2 * b) + vv * reactive;
  f.dp = {T(2.0) * vk * g - vl * active, -(vv * reactive), -(vk * active), vv * reactive,
          vk2 - vv * c, -(vv * s)};
  f.dq = {-(T(2.0) * vk * b) + vl * reactive, -(vv * active), vk * reactive, vv * active,
          -(vv * s), -vk2 + vv * c};
  return f;
}

template <class T>
struct FlowEvaluation {
  VecT<T> flows;      // 2L: canonical orientation (from -> to)
  VecT<T> reverse;    // 2L: opposite orientation (to -> from)
  VecT<T> injection;  // 2N: P_k for every bus, slack included
  MatT<T> flows_dx, flows_dy;          // 2L x nx, 2L x ny
  MatT<T> injection_dx, injection_dy;  // 2N x nx, 2N x ny
};

inline int v_column(int bus) { return bus == 0 ? -1 : 2 * (bus - 1); }
inline int theta_column(int bus) { return bus == 0 ? -1 : 2 * (bus - 1) + 1; }

template <class T>
FlowEvaluation<T> evaluate_flows(const Network& net, const VecT<T>& x, const VecT<T>& y,
                                 bool with_jacobians) {
  const int n = net.n_buses();
  const int nl = net.n_lines();
  const int nx = net.state_dim();
  const int ny = net.param_dim();

  auto v = [&](int bus) -> T { return bus == 0 ? T(net.slack_voltage()) : x[2 * (bus - 1)]; };
  auto th = [&](int bus) -> T {
    return bus == 0 ? T(net.slack_angle()) : x[2 * (bus - 1) + 1];
  };

  FlowEvaluation<T> e;
  e.flows = VecT<T>::Zero(2 * nl);
  e.reverse = VecT<T>::Zero(2 * nl);
  e.injection = VecT<T>::Zero(2 * n);
  if (with_jacobians) {
    e.flows_dx = MatT<T>::Zero(2 * nl, nx);
    e.flows_dy = MatT<T>::Zero(2 * nl, ny);
    e.injection_dx = MatT<T>::Zero(2 * n, nx);
    e.injection_dy = MatT<T>::Zero(2 * n, ny);
  }

  for (int i = 0; i < nl; ++i) {
    const Line& line = net.lines()[i];
    const T g = y[2 * i];
    const T b = y[2 * i + 1];
    const int k = line.from;
    const int l = line.to;
    const auto fwd = branch_flow<T>(v(k), th(k), v(l), th(l), g, b);
    const auto bwd = branch_flow<T>(v(l), th(l), v(k), th(k), g, b);

    e.flows[2 * i] = fwd.p;
    e.flows[2 * i + 1] = fwd.q;
    e.reverse[2 * i] = bwd.p;
    e.reverse[2 * i + 1] = bwd.q;
    e.injection[2 * k] += fwd.p;
    e.injection[2 * k + 1] += fwd.q;
    e.injection[2 * l] += bwd.p;
    e.injection[2 * l + 1] += bwd.q;

    if (!with_jacobians) continue;

    // Columns of (v_k, th_k, v_l, th_l) in x; -1 for the slack.
    const std::array<int, 4> cols_fwd = {v_column(k), theta_column(k), v_column(l),
                                         theta_column(l)};
    const std::array<int, 4> cols_bwd = {v_column(l), theta_column(l), v_column(k),
                                         theta_column(k)};
    for (int j = 0; j < 4; ++j) {
      if (cols_fwd[j] >= 0) {
        e.flows_dx(2 * i, cols_fwd[j]) = fwd.dp[j];
        e.flows_dx(2 * i + 1, cols_fwd[j]) = fwd.dq[j];
        e.injection_dx(2 * k, cols_fwd[j]) += fwd.dp[j];
        e.injection_dx(2 * k + 1, cols_fwd[j]) += fwd.dq[j];
      }
      if (cols_bwd[j] >= 0) {
        e.injection_dx(2 * l, cols_bwd[j]) += bwd.dp[j];
        e.injection_dx(2 * l + 1, cols_bwd[j]) += bwd.dq[j];
      }
    }
    for (int j = 0; j < 2; ++j) {
      e.flows_dy(2 * i, 2 * i + j) = fwd.dp[4 + j];
      e.flows_dy(2 * i + 1, 2 * i + j) = fwd.dq[4 + j];
      e.injection_dy(2 * k, 2 * i + j) = fwd.dp[4 + j];
      e.injection_dy(2 * k + 1, 2 * i + j) = fwd.dq[4 + j];
      e.injection_dy(2 * l, 2 * i + j) = bwd.dp[4 + j];
      e.injection_dy(2 * l + 1, 2 * i + j) = bwd.dq[4 + j];
    }
  }
  return e;
}

}  // namespace oedgrid::detail
