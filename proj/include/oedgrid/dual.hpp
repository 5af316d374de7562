#pragma once

// Forward-mode dual number carrying one directional derivative. Only the
// operations used by the flow model are provided.

#include <Eigen/Core>

#include <cmath>

namespace oedgrid {

struct Dual {
  double val = 0.0;
  double der = 0.0;

  constexpr Dual() = default;
  constexpr Dual(double v) : val(v) {}  // NOLINT: implicit promotion of constants
  constexpr Dual(double v, double d) : val(v), der(d) {}

  Dual& operator+=(const Dual& o) {
    val += o.val;
    der += o.der;
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    val -= o.val;
    der -= o.der;
    return *this;
  }
  Dual& operator*=(const Dual& o) {
    der = der * o.val + val * o.der;
    val *= o.val;
    return *this;
  }
};

inline Dual operator+(Dual a, const Dual& b) { return a += b; }
inline Dual operator-(Dual a, const Dual& b) { return a -= b; }
inline Dual operator*(Dual a, const Dual& b) { return a *= b; }
inline Dual operator-(const Dual& a) { return {-a.val, -a.der}; }
inline Dual sin(const Dual& a) { return {std::sin(a.val), std::cos(a.val) * a.der}; }
inline Dual cos(const Dual& a) { return {std::cos(a.val), -std::sin(a.val) * a.der}; }

inline double value_of(double x) { return x; }
inline double value_of(const Dual& x) { return x.val; }

}  // namespace oedgrid

namespace Eigen {

template <>
struct NumTraits<oedgrid::Dual> : GenericNumTraits<double> {
  using Real = oedgrid::Dual;
  using NonInteger = oedgrid::Dual;
  using Nested = oedgrid::Dual;
  using Literal = oedgrid::Dual;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 2,
    AddCost = 2,
    MulCost = 4,
  };
};

}  // namespace Eigen
