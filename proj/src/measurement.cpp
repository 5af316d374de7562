#include "oedgrid/measurement.hpp"

#include "oedgrid/errors.hpp"
#include "oedgrid/flow_model.hpp"
#include "oedgrid/linalg.hpp"
#include "oedgrid/powerflow.hpp"

#include <cmath>

namespace oedgrid {

Vector measurement_function(const Network& net, const GridState& x, const AdmittanceParams& y) {
  check_state(net, x);
  check_params(net, y);
  const auto e = detail::evaluate_flows<double>(net, x.values, y.values, false);
  Vector m(net.measurement_dim());
  m.segment(MeasurementLayout::state_offset(), net.state_dim()) = x.values;
  m.segment(MeasurementLayout::flow_offset(net), net.param_dim()) = e.flows;
  return m;
}

MeasurementJacobians measurement_jacobians(const Network& net, const GridState& x,
                                           const AdmittanceParams& y) {
  check_state(net, x);
  check_params(net, y);
  const auto e = detail::evaluate_flows<double>(net, x.values, y.values, true);
  const int m = net.measurement_dim();
  MeasurementJacobians j{Matrix::Zero(m, net.state_dim()), Matrix::Zero(m, net.param_dim())};
  j.dx.block(MeasurementLayout::state_offset(), 0, net.state_dim(), net.state_dim()).setIdentity();
  j.dx.middleRows(MeasurementLayout::flow_offset(net), net.param_dim()) = e.flows_dx;
  j.dy.middleRows(MeasurementLayout::flow_offset(net), net.param_dim()) = e.flows_dy;
  return j;
}

NoiseModel NoiseModel::isotropic(int dim, double variance, std::uint64_t seed) {
  if (!(variance >= 0.0)) throw InvalidArgument("noise variance must be nonnegative");
  NoiseModel n;
  n.covariance = variance * Matrix::Identity(dim, dim);
  n.seed = seed;
  n.enabled = variance > 0.0;
  return n;
}

double NormalSampler::uniform() {
  // (k + 0.5) / 2^53 with k in [0, 2^53): never 0 or 1.
  const std::uint64_t k = engine_() >> 11;
  return (static_cast<double>(k) + 0.5) * 0x1.0p-53;
}

double NormalSampler::next() {
  if (spare_) {
    const double s = *spare_;
    spare_.reset();
    return s;
  }
  for (;;) {
    const double a = 2.0 * uniform() - 1.0;
    const double b = 2.0 * uniform() - 1.0;
    const double r2 = a * a + b * b;
    if (r2 >= 1.0 || r2 == 0.0) continue;
    const double f = std::sqrt(-2.0 * std::log(r2) / r2);
    spare_ = b * f;
    return a * f;
  }
}

Vector NormalSampler::draw(int n) {
  Vector z(n);
  for (int i = 0; i < n; ++i) z[i] = next();
  return z;
}

MeasurementSimulator::MeasurementSimulator(NoiseModel noise)
    : noise_(std::move(noise)), sampler_(noise_.seed) {
  if (noise_.covariance.rows() != noise_.covariance.cols()) {
    throw DimensionMismatch("noise covariance must be square");
  }
  if (noise_.enabled) {
    auto llt = cholesky(noise_.covariance);
    if (!llt) throw InvalidArgument("noise covariance is not positive definite");
    factor_ = llt->matrixL();
  }
}

SimulatedMeasurement MeasurementSimulator::simulate(const Network& net,
                                                    const AdmittanceParams& y_true,
                                                    const GeneratorInput& u,
                                                    const GridState& x_init) {
  if (noise_.covariance.rows() != net.measurement_dim()) {
    throw DimensionMismatch("noise covariance does not match the measurement dimension");
  }
  auto pf = solve_powerflow(net, y_true, u, x_init);
  SimulatedMeasurement out{measurement_function(net, pf.state, y_true), std::move(pf.state)};
  if (noise_.enabled) {
    out.eta += factor_.triangularView<Eigen::Lower>() * sampler_.draw(net.measurement_dim());
  }
  ++draws_;
  return out;
}

}  // namespace oedgrid
