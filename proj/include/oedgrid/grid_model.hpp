#pragma once

// Bus/branch grid model without shunts or taps.
//
// Buses are 0-based in the C++ API; bus 0 is the slack bus with fixed voltage
// magnitude and angle. Orderings used by every module:
//
//   state x  = (v_1, th_1, v_2, th_2, ..., v_{N-1}, th_{N-1})   slack excluded
//   params y = (g_0, b_0, g_1, b_1, ...)                        one pair per line
//   input u  = (p_k, q_k) for each non-slack generator bus, ascending bus order

#include <Eigen/Dense>

#include <complex>
#include <limits>
#include <utility>
#include <vector>

namespace oedgrid {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using ComplexMatrix = Eigen::MatrixXcd;

// Active/reactive power pair in per-unit.
struct PowerPair {
  double p = 0.0;
  double q = 0.0;
};

// Transmission line between two buses, stored with from < to.
struct Line {
  int from = 0;
  int to = 0;

  friend bool operator==(const Line&, const Line&) = default;
};

struct Bounds {
  Vector u_lo, u_hi;
  Vector x_lo, x_hi;
  // Slack generation box; infinite by default.
  Eigen::Vector2d slack_lo = Eigen::Vector2d::Constant(-std::numeric_limits<double>::infinity());
  Eigen::Vector2d slack_hi = Eigen::Vector2d::Constant(std::numeric_limits<double>::infinity());
};

struct NetworkSpec {
  int n_buses = 0;
  std::vector<Line> lines;
  std::vector<int> generators;  // buses carrying a generator; must contain 0
  Vector p_demand;              // per bus
  Vector q_demand;
  double slack_voltage = 1.0;
  double slack_angle = 0.0;  // nonzero only for angle-shift checks
  double base_mva = 100.0;
  double base_kv = 230.0;
  Bounds bounds;  // empty vectors mean "unbounded"
};

class Network {
 public:
  explicit Network(NetworkSpec spec);

  int n_buses() const noexcept { return n_buses_; }
  int n_lines() const noexcept { return static_cast<int>(lines_.size()); }
  int state_dim() const noexcept { return 2 * (n_buses_ - 1); }
  int param_dim() const noexcept { return 2 * n_lines(); }
  int input_dim() const noexcept { return 2 * static_cast<int>(controllable_.size()); }
  int measurement_dim() const noexcept { return 2 * (n_lines() + n_buses_ - 1); }

  const std::vector<Line>& lines() const noexcept { return lines_; }
  const std::vector<int>& generators() const noexcept { return generators_; }
  // Generator buses other than the slack, in input order.
  const std::vector<int>& controllable_generators() const noexcept { return controllable_; }
  // Index of the line joining a and b (either orientation), or -1.
  int line_index(int a, int b) const noexcept;
  // Line indices incident to a bus.
  const std::vector<int>& incident_lines(int bus) const { return incident_.at(bus); }
  // Position of bus in u (pairs), or -1 when the bus has no controllable generator.
  int input_slot(int bus) const noexcept { return input_slot_[bus]; }

  PowerPair demand(int bus) const { return {p_demand_[bus], q_demand_[bus]}; }
  const Vector& p_demand() const noexcept { return p_demand_; }
  const Vector& q_demand() const noexcept { return q_demand_; }
  double slack_voltage() const noexcept { return slack_voltage_; }
  double slack_angle() const noexcept { return slack_angle_; }
  double base_mva() const noexcept { return base_mva_; }
  double base_kv() const noexcept { return base_kv_; }
  const Bounds& bounds() const noexcept { return bounds_; }

  // Copy with a different slack angle (used to check angle-shift invariance).
  Network with_slack_angle(double angle) const;
  Network with_bounds(Bounds bounds) const;
  Network with_demand(Vector p_demand, Vector q_demand) const;

 private:
  int n_buses_;
  std::vector<Line> lines_;
  std::vector<int> generators_;
  std::vector<int> controllable_;
  std::vector<int> input_slot_;
  std::vector<std::vector<int>> incident_;
  Vector p_demand_, q_demand_;
  double slack_voltage_, slack_angle_, base_mva_, base_kv_;
  Bounds bounds_;
};

struct AdmittanceParams {
  Vector values;

  AdmittanceParams() = default;
  explicit AdmittanceParams(Vector v) : values(std::move(v)) {}

  static AdmittanceParams uniform(const Network& net, double g, double b);

  int size() const noexcept { return static_cast<int>(values.size()); }
  double g(int line) const { return values[2 * line]; }
  double b(int line) const { return values[2 * line + 1]; }
};

struct GridState {
  Vector values;

  GridState() = default;
  explicit GridState(Vector v) : values(std::move(v)) {}

  // v = 1, theta = 0 at every non-slack bus.
  static GridState flat(const Network& net);

  int size() const noexcept { return static_cast<int>(values.size()); }
  // Non-slack buses only (bus >= 1).
  double v(int bus) const { return values[2 * (bus - 1)]; }
  double theta(int bus) const { return values[2 * (bus - 1) + 1]; }
};

struct GeneratorInput {
  Vector values;

  GeneratorInput() = default;
  explicit GeneratorInput(Vector v) : values(std::move(v)) {}

  int size() const noexcept { return static_cast<int>(values.size()); }
};

// Dimension checks shared by all modules.
void check_state(const Network& net, const GridState& x);
void check_params(const Network& net, const AdmittanceParams& y);
void check_input(const Network& net, const GeneratorInput& u);

ComplexMatrix build_admittance_matrix(const Network& net, const AdmittanceParams& y);

// Nodal power residuum P_k for any bus, including the slack.
PowerPair power_residuum(const Network& net, const GridState& x, const AdmittanceParams& y, int bus);

// Stacked residuum over the non-slack buses, length state_dim().
Vector power_residuum_all(const Network& net, const GridState& x, const AdmittanceParams& y);

// Net supply S(u) over the non-slack buses, length state_dim().
Vector net_supply(const Network& net, const GeneratorInput& u);

// Power flowing out of `from` into the line towards `to`. Either orientation of an
// existing line is accepted.
PowerPair line_flow(const Network& net, const GridState& x, const AdmittanceParams& y, int from,
                    int to);

// Generation the slack bus must supply: P_0(x, y) + demand at bus 0.
PowerPair slack_power(const Network& net, const GridState& x, const AdmittanceParams& y);

Matrix jacobian_P_x(const Network& net, const GridState& x, const AdmittanceParams& y);
Matrix jacobian_P_y(const Network& net, const GridState& x, const AdmittanceParams& y);

// Derivative of S(u) with respect to u; a 0/1 selection matrix.
Matrix supply_input_jacobian(const Network& net);

}  // namespace oedgrid
