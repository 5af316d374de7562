#pragma once

#include "oedgrid/grid_model.hpp"

#include <cstdint>
#include <optional>
#include <random>

namespace oedgrid {

// Measurement vector layout: the full state first, then (p, q) of every line
// flow in line order (from -> to). Shared by the simulator and the estimator.
struct MeasurementLayout {
  static constexpr int state_offset() { return 0; }
  static int flow_offset(const Network& net) { return net.state_dim(); }
  static int size(const Network& net) { return net.measurement_dim(); }
};

Vector measurement_function(const Network& net, const GridState& x, const AdmittanceParams& y);

struct MeasurementJacobians {
  Matrix dx;  // m x state_dim
  Matrix dy;  // m x param_dim
};

MeasurementJacobians measurement_jacobians(const Network& net, const GridState& x,
                                           const AdmittanceParams& y);

struct NoiseModel {
  Matrix covariance;
  std::uint64_t seed = 0;
  bool enabled = true;

  static NoiseModel isotropic(int dim, double variance, std::uint64_t seed);
};

// Standard normal stream: std::mt19937_64 (bit-exact by the C++ standard) seeded
// with the 64-bit seed; uniforms on (0,1) built from the top 53 bits; normals
// from the Marsaglia polar method, consuming pairs in order.
class NormalSampler {
 public:
  explicit NormalSampler(std::uint64_t seed) : engine_(seed) {}

  double next();
  Vector draw(int n);

 private:
  double uniform();

  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

struct SimulatedMeasurement {
  Vector eta;
  GridState x_true;
};

// Plays the role of the physical grid: solves the power flow at the true
// parameters and adds correlated Gaussian noise L z with Sigma = L L^T. Each call
// consumes the next measurement_dim() normals of the stream.
class MeasurementSimulator {
 public:
  explicit MeasurementSimulator(NoiseModel noise);

  SimulatedMeasurement simulate(const Network& net, const AdmittanceParams& y_true,
                                const GeneratorInput& u, const GridState& x_init);

  std::uint64_t draws() const noexcept { return draws_; }  // simulate() calls so far
  const NoiseModel& noise() const noexcept { return noise_; }

 private:
  NoiseModel noise_;
  Matrix factor_;
  NormalSampler sampler_;
  std::uint64_t draws_ = 0;
};

}  // namespace oedgrid
