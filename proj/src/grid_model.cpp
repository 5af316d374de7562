#include "oedgrid/grid_model.hpp"

#include "oedgrid/errors.hpp"
#include "oedgrid/flow_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace oedgrid {

namespace {

void check_box(const Vector& lo, const Vector& hi, int dim, const char* name) {
  if (lo.size() == 0 && hi.size() == 0) return;
  if (lo.size() != dim || hi.size() != dim) {
    throw DimensionMismatch(std::string(name) + " bounds must have dimension " +
                            std::to_string(dim));
  }
  for (int i = 0; i < dim; ++i) {
    if (!(lo[i] <= hi[i]) || !std::isfinite(lo[i]) || !std::isfinite(hi[i])) {
      throw InvalidArgument(std::string(name) + " bounds invalid at component " +
                            std::to_string(i));
    }
  }
}

}  // namespace

Network::Network(NetworkSpec spec)
    : n_buses_(spec.n_buses),
      lines_(std::move(spec.lines)),
      generators_(std::move(spec.generators)),
      p_demand_(std::move(spec.p_demand)),
      q_demand_(std::move(spec.q_demand)),
      slack_voltage_(spec.slack_voltage),
      slack_angle_(spec.slack_angle),
      base_mva_(spec.base_mva),
      base_kv_(spec.base_kv),
      bounds_(std::move(spec.bounds)) {
  if (n_buses_ < 2) throw InvalidArgument("network needs at least two buses");
  if (!(slack_voltage_ > 0.0)) throw InvalidArgument("slack voltage must be positive");

  for (auto& line : lines_) {
    if (line.from < 0 || line.to < 0 || line.from >= n_buses_ || line.to >= n_buses_) {
      throw InvalidArgument("line endpoint out of range");
    }
    if (line.from == line.to) throw InvalidArgument("self-loop line");
    if (line.from > line.to) std::swap(line.from, line.to);
  }
  for (size_t i = 0; i < lines_.size(); ++i) {
    for (size_t j = i + 1; j < lines_.size(); ++j) {
      if (lines_[i] == lines_[j]) throw InvalidArgument("duplicate line");
    }
  }

  std::sort(generators_.begin(), generators_.end());
  generators_.erase(std::unique(generators_.begin(), generators_.end()), generators_.end());
  if (generators_.empty() || generators_.front() != 0) {
    throw InvalidArgument("slack bus 0 must carry a generator");
  }
  if (generators_.back() >= n_buses_) throw InvalidArgument("generator bus out of range");

  input_slot_.assign(n_buses_, -1);
  for (size_t i = 1; i < generators_.size(); ++i) {
    input_slot_[generators_[i]] = static_cast<int>(controllable_.size());
    controllable_.push_back(generators_[i]);
  }

  incident_.assign(n_buses_, {});
  for (int i = 0; i < n_lines(); ++i) {
    incident_[lines_[i].from].push_back(i);
    incident_[lines_[i].to].push_back(i);
  }

  if (p_demand_.size() == 0) p_demand_ = Vector::Zero(n_buses_);
  if (q_demand_.size() == 0) q_demand_ = Vector::Zero(n_buses_);
  if (p_demand_.size() != n_buses_ || q_demand_.size() != n_buses_) {
    throw DimensionMismatch("demand vectors must have one entry per bus");
  }

  check_box(bounds_.u_lo, bounds_.u_hi, input_dim(), "input");
  check_box(bounds_.x_lo, bounds_.x_hi, state_dim(), "state");
  if (!(bounds_.slack_lo.array() <= bounds_.slack_hi.array()).all()) {
    throw InvalidArgument("slack bounds invalid");
  }
}

int Network::line_index(int a, int b) const noexcept {
  if (a > b) std::swap(a, b);
  for (int i = 0; i < n_lines(); ++i) {
    if (lines_[i].from == a && lines_[i].to == b) return i;
  }
  return -1;
}

Network Network::with_slack_angle(double angle) const {
  Network copy = *this;
  copy.slack_angle_ = angle;
  return copy;
}

Network Network::with_bounds(Bounds bounds) const {
  Network copy = *this;
  copy.bounds_ = std::move(bounds);
  check_box(copy.bounds_.u_lo, copy.bounds_.u_hi, input_dim(), "input");
  check_box(copy.bounds_.x_lo, copy.bounds_.x_hi, state_dim(), "state");
  return copy;
}

Network Network::with_demand(Vector p_demand, Vector q_demand) const {
  if (p_demand.size() != n_buses_ || q_demand.size() != n_buses_) {
    throw DimensionMismatch("demand vectors must have one entry per bus");
  }
  Network copy = *this;
  copy.p_demand_ = std::move(p_demand);
  copy.q_demand_ = std::move(q_demand);
  return copy;
}

AdmittanceParams AdmittanceParams::uniform(const Network& net, double g, double b) {
  Vector v(net.param_dim());
  for (int i = 0; i < net.n_lines(); ++i) {
    v[2 * i] = g;
    v[2 * i + 1] = b;
  }
  return AdmittanceParams(std::move(v));
}

GridState GridState::flat(const Network& net) {
  Vector v = Vector::Zero(net.state_dim());
  for (int k = 1; k < net.n_buses(); ++k) v[2 * (k - 1)] = 1.0;
  return GridState(std::move(v));
}

void check_state(const Network& net, const GridState& x) {
  if (x.size() != net.state_dim()) {
    throw DimensionMismatch("state has dimension " + std::to_string(x.size()) + ", expected " +
                            std::to_string(net.state_dim()));
  }
}

void check_params(const Network& net, const AdmittanceParams& y) {
  if (y.size() != net.param_dim()) {
    throw DimensionMismatch("admittance vector has dimension " + std::to_string(y.size()) +
                            ", expected " + std::to_string(net.param_dim()));
  }
}

void check_input(const Network& net, const GeneratorInput& u) {
  if (u.size() != net.input_dim()) {
    throw DimensionMismatch("input has dimension " + std::to_string(u.size()) + ", expected " +
                            std::to_string(net.input_dim()));
  }
}

ComplexMatrix build_admittance_matrix(const Network& net, const AdmittanceParams& y) {
  check_params(net, y);
  ComplexMatrix Y = ComplexMatrix::Zero(net.n_buses(), net.n_buses());
  for (int i = 0; i < net.n_lines(); ++i) {
    const auto [k, l] = net.lines()[i];
    const std::complex<double> a(y.g(i), y.b(i));
    Y(k, k) += a;
    Y(l, l) += a;
    Y(k, l) -= a;
    Y(l, k) -= a;
  }
  return Y;
}

PowerPair power_residuum(const Network& net, const GridState& x, const AdmittanceParams& y,
                         int bus) {
  check_state(net, x);
  check_params(net, y);
  if (bus < 0 || bus >= net.n_buses()) throw InvalidArgument("bus index out of range");
  // Sum of outgoing line flows, evaluated line by line.
  PowerPair out;
  for (int i : net.incident_lines(bus)) {
    const Line& line = net.lines()[i];
    const PowerPair f = line_flow(net, x, y, bus, line.from == bus ? line.to : line.from);
    out.p += f.p;
    out.q += f.q;
  }
  return out;
}

Vector power_residuum_all(const Network& net, const GridState& x, const AdmittanceParams& y) {
  check_state(net, x);
  check_params(net, y);
  const auto e = detail::evaluate_flows<double>(net, x.values, y.values, false);
  return e.injection.tail(net.state_dim());
}

Vector net_supply(const Network& net, const GeneratorInput& u) {
  check_input(net, u);
  Vector s(net.state_dim());
  for (int k = 1; k < net.n_buses(); ++k) {
    s[2 * (k - 1)] = -net.p_demand()[k];
    s[2 * (k - 1) + 1] = -net.q_demand()[k];
    const int slot = net.input_slot(k);
    if (slot >= 0) {
      s[2 * (k - 1)] += u.values[2 * slot];
      s[2 * (k - 1) + 1] += u.values[2 * slot + 1];
    }
  }
  return s;
}

PowerPair line_flow(const Network& net, const GridState& x, const AdmittanceParams& y, int from,
                    int to) {
  check_state(net, x);
  check_params(net, y);
  const int idx = net.line_index(from, to);
  if (idx < 0) {
    throw InvalidArgument("no line between buses " + std::to_string(from) + " and " +
                          std::to_string(to));
  }
  auto v = [&](int bus) { return bus == 0 ? net.slack_voltage() : x.v(bus); };
  auto th = [&](int bus) { return bus == 0 ? net.slack_angle() : x.theta(bus); };
  const auto f = detail::branch_flow<double>(v(from), th(from), v(to), th(to), y.g(idx), y.b(idx));
  return {f.p, f.q};
}

PowerPair slack_power(const Network& net, const GridState& x, const AdmittanceParams& y) {
  check_state(net, x);
  check_params(net, y);
  const auto e = detail::evaluate_flows<double>(net, x.values, y.values, false);
  return {e.injection[0] + net.p_demand()[0], e.injection[1] + net.q_demand()[0]};
}

Matrix jacobian_P_x(const Network& net, const GridState& x, const AdmittanceParams& y) {
  check_state(net, x);
  check_params(net, y);
  const auto e = detail::evaluate_flows<double>(net, x.values, y.values, true);
  return e.injection_dx.bottomRows(net.state_dim());
}

Matrix jacobian_P_y(const Network& net, const GridState& x, const AdmittanceParams& y) {
  check_state(net, x);
  check_params(net, y);
  const auto e = detail::evaluate_flows<double>(net, x.values, y.values, true);
  return e.injection_dy.bottomRows(net.state_dim());
}

Matrix supply_input_jacobian(const Network& net) {
  Matrix d = Matrix::Zero(net.state_dim(), net.input_dim());
  for (int slot = 0; slot < static_cast<int>(net.controllable_generators().size()); ++slot) {
    const int k = net.controllable_generators()[slot];
    d(2 * (k - 1), 2 * slot) = 1.0;
    d(2 * (k - 1) + 1, 2 * slot + 1) = 1.0;
  }
  return d;
}

}  // namespace oedgrid
