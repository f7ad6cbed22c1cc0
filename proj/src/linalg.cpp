#include "engel/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "engel/error.hpp"

namespace engel {

Eigen::VectorXd singular_values(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues();
}

int numerical_rank(const Eigen::VectorXd& sigma, double rel_tol) {
  if (sigma.size() == 0 || sigma(0) <= 0.0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    if (sigma(i) / sigma(0) >= rel_tol) r = static_cast<int>(i) + 1;
  }
  return r;
}

int numerical_rank(const Eigen::MatrixXd& m, double rel_tol) {
  return numerical_rank(singular_values(m), rel_tol);
}

namespace {

Eigen::MatrixXd orthonormal_columns(const Eigen::MatrixXd& a) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  return qr.householderQ() * Eigen::MatrixXd::Identity(a.rows(), a.cols());
}

}  // namespace

double max_principal_angle(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw PreconditionError("principal angles need subspaces of equal dimension");
  Eigen::MatrixXd qa = orthonormal_columns(a);
  Eigen::MatrixXd qb = orthonormal_columns(b);
  Eigen::MatrixXd residual = qb - qa * (qa.transpose() * qb);
  double s = residual.size() == 0 ? 0.0 : singular_values(residual)(0);
  return std::asin(std::clamp(s, 0.0, 1.0));
}

Eigen::MatrixXd kernel_basis(const Eigen::RowVectorXd& normal) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(normal), Eigen::ComputeFullV);
  const Eigen::Index n = normal.size();
  return svd.matrixV().rightCols(n - 1);
}

LeastSquares least_squares(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  Eigen::VectorXd x = a.colPivHouseholderQr().solve(b);
  return {x, (a * x - b).norm()};
}

double projective_angle(double a1, double b1, double a2, double b2) {
  double cross = std::abs(a1 * b2 - a2 * b1);
  double dot = std::abs(a1 * a2 + b1 * b2);
  return std::atan2(cross, dot);
}

}  // namespace engel
