#pragma once

#include <Eigen/Dense>

namespace lamp::linalg {

struct TruncatedSvd {
    Eigen::MatrixXd left;   // rows x rank, orthonormal columns
    Eigen::VectorXd values; // rank, nonincreasing
};

/// Leading `rank` left singular vectors of `matrix`. Each column is flipped
/// so that its largest-magnitude entry (first one on ties) is nonnegative.
/// Throws NumericalError if the SVD fails to converge.
TruncatedSvd truncated_svd(const Eigen::MatrixXd& matrix, Eigen::Index rank);

void canonicalize_signs(Eigen::MatrixXd& columns);

/// Ridge penalty for a Gram matrix: relative * trace(gram) / dim, or
/// `relative` itself when the trace vanishes.
double scaled_ridge(const Eigen::MatrixXd& gram, double relative);

/// True when a factorization of a symmetric PSD matrix failed or has a
/// pivot below 1e-14 of the largest one.
bool is_singular(const Eigen::LDLT<Eigen::MatrixXd>& ldlt);

/// Solves (gram + lambda I) X = rhs for symmetric PSD gram. Throws
/// NumericalError when the regularized matrix is numerically singular.
Eigen::MatrixXd solve_regularized(const Eigen::MatrixXd& gram, double lambda,
                                  const Eigen::MatrixXd& rhs);

} // namespace lamp::linalg
