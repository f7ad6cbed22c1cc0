#pragma once

#include <Eigen/Dense>

namespace engel {

/// Singular values in descending order.
Eigen::VectorXd singular_values(const Eigen::MatrixXd& m);

/// Largest r with sigma_r / sigma_1 >= rel_tol (0 for the zero matrix).
int numerical_rank(const Eigen::VectorXd& sigma, double rel_tol);
int numerical_rank(const Eigen::MatrixXd& m, double rel_tol);

/// Largest principal angle between the column spaces of `a` and `b`
/// (equal column counts, full column rank). Computed from the sine so
/// tiny angles keep full relative accuracy.
double max_principal_angle(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Orthonormal basis of the orthogonal complement of the row vector `normal`.
Eigen::MatrixXd kernel_basis(const Eigen::RowVectorXd& normal);

struct LeastSquares {
  Eigen::VectorXd x;
  double residual;  // ||A x - b||
};

LeastSquares least_squares(const Eigen::MatrixXd& a, const Eigen::VectorXd& b);

/// Angle between lines spanned by (a1, b1) and (a2, b2), in [0, pi/2].
double projective_angle(double a1, double b1, double a2, double b2);

}  // namespace engel
