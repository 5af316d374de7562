#pragma once

// Small dense factorization helpers shared by the solvers.

#include <Eigen/Dense>

#include <cmath>
#include <optional>

namespace oedgrid {

// LU factorization, or nullopt when the reciprocal condition estimate is below
// rcond_min (numerically singular).
inline std::optional<Eigen::PartialPivLU<Eigen::MatrixXd>> factorize(const Eigen::MatrixXd& a,
                                                                    double rcond_min = 1e-14) {
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  const double rc = lu.rcond();
  if (!(rc >= rcond_min)) return std::nullopt;
  return lu;
}

// Symmetric Ruiz equilibration: d such that diag(d) A diag(d) has rows of unit max-norm.
inline Eigen::VectorXd equilibrate(const Eigen::MatrixXd& a, int sweeps = 5) {
  Eigen::VectorXd d = Eigen::VectorXd::Ones(a.rows());
  for (int s = 0; s < sweeps; ++s) {
    const Eigen::MatrixXd b = d.asDiagonal() * a * d.asDiagonal();
    for (int i = 0; i < a.rows(); ++i) {
      const double m = b.row(i).cwiseAbs().maxCoeff();
      if (m > 0.0) d[i] /= std::sqrt(m);
    }
  }
  return d;
}

// Cholesky factorization of a symmetric positive definite matrix, or nullopt.
inline std::optional<Eigen::LLT<Eigen::MatrixXd>> cholesky(const Eigen::MatrixXd& a) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) return std::nullopt;
  return llt;
}

// Inverse of an SPD matrix via Cholesky solves against identity columns,
// symmetrized. Returns nullopt if the factorization fails.
inline std::optional<Eigen::MatrixXd> spd_inverse(const Eigen::MatrixXd& a) {
  auto llt = cholesky(a);
  if (!llt) return std::nullopt;
  Eigen::MatrixXd inv = llt->solve(Eigen::MatrixXd::Identity(a.rows(), a.cols()));
  return Eigen::MatrixXd(0.5 * (inv + inv.transpose()));
}

}  // namespace oedgrid
