#include "lamp/linalg.hpp"

#include <cmath>

#include "lamp/error.hpp"

namespace lamp::linalg {

void canonicalize_signs(Eigen::MatrixXd& columns) {
    for (Eigen::Index j = 0; j < columns.cols(); ++j) {
        Eigen::Index arg = 0;
        double best = -1.0;
        for (Eigen::Index i = 0; i < columns.rows(); ++i) {
            const double mag = std::abs(columns(i, j));
            if (mag > best) {
                best = mag;
                arg = i;
            }
        }
        if (columns.rows() > 0 && columns(arg, j) < 0.0) columns.col(j) *= -1.0;
    }
}

namespace {

// The divide-and-conquer SVD in Eigen 3.4.0 occasionally returns a wrong
// singular triplet on triangular input. Its output is checked against the
// Frobenius norm and against ||A^T u_k||; a mismatch falls back to Jacobi.
bool consistent(const Eigen::MatrixXd& a, const Eigen::MatrixXd& u, const Eigen::VectorXd& s) {
    if (!u.allFinite() || !s.allFinite()) return false;
    const double scale = a.squaredNorm();
    if (std::abs(s.squaredNorm() - scale) > 1e-10 * scale) return false;
    const Eigen::VectorXd captured = (u.transpose() * a).rowwise().norm();
    const double tol = 1e-9 * (s.size() ? s(0) : 0.0);
    for (Eigen::Index k = 0; k < s.size(); ++k) {
        if (std::abs(captured(k) - s(k)) > tol) return false;
        if (k > 0 && s(k) > s(k - 1)) return false;
    }
    return true;
}

TruncatedSvd core_svd(const Eigen::MatrixXd& core) {
    Eigen::BDCSVD<Eigen::MatrixXd> fast(core, Eigen::ComputeFullU);
    if (fast.info() == Eigen::Success && consistent(core, fast.matrixU(), fast.singularValues())) {
        return {fast.matrixU(), fast.singularValues()};
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> exact(core, Eigen::ComputeFullU);
    if (exact.info() != Eigen::Success) throw NumericalError("SVD did not converge");
    return {exact.matrixU(), exact.singularValues()};
}

} // namespace

TruncatedSvd truncated_svd(const Eigen::MatrixXd& matrix, Eigen::Index rank) {
    const Eigen::Index m = matrix.rows();
    const Eigen::Index n = matrix.cols();
    if (rank < 1 || rank > std::min(m, n)) {
        throw ValidationError("truncated SVD rank " + std::to_string(rank) + " outside [1, " +
                              std::to_string(std::min(m, n)) + "]");
    }

    // Reduce to a k x k core with a Householder QR (k = min(m, n)), then run
    // the SVD on the core. The left factor is mapped back through Q when the
    // matrix is tall.
    TruncatedSvd out;
    if (m > n) {
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(matrix);
        const Eigen::MatrixXd r =
            qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
        const auto core = core_svd(r);
        out.left = Eigen::MatrixXd::Zero(m, rank);
        out.left.topRows(n) = core.left.leftCols(rank);
        out.left.applyOnTheLeft(qr.householderQ());
        out.values = core.values.head(rank);
    } else {
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(matrix.transpose());
        const Eigen::MatrixXd rt =
            qr.matrixQR().topRows(m).triangularView<Eigen::Upper>().transpose();
        const auto core = core_svd(rt);
        out.left = core.left.leftCols(rank);
        out.values = core.values.head(rank);
    }
    if (!out.left.allFinite() || !out.values.allFinite()) {
        throw NumericalError("SVD produced non-finite output");
    }
    canonicalize_signs(out.left);
    return out;
}

double scaled_ridge(const Eigen::MatrixXd& gram, double relative) {
    const double trace = gram.trace();
    if (trace > 0.0) return relative * trace / static_cast<double>(gram.rows());
    return relative;
}

bool is_singular(const Eigen::LDLT<Eigen::MatrixXd>& ldlt) {
    if (ldlt.info() != Eigen::Success) return true;
    const Eigen::VectorXd d = ldlt.vectorD();
    if (d.size() == 0) return false;
    if (!d.allFinite()) return true;
    return !(d.minCoeff() > 1e-14 * d.cwiseAbs().maxCoeff());
}

Eigen::MatrixXd solve_regularized(const Eigen::MatrixXd& gram, double lambda,
                                  const Eigen::MatrixXd& rhs) {
    Eigen::MatrixXd a = gram;
    a.diagonal().array() += lambda;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
    if (is_singular(ldlt)) {
        throw NumericalError("normal matrix is singular; use a positive ridge lambda");
    }
    Eigen::MatrixXd x = ldlt.solve(rhs);
    if (!x.allFinite()) {
        throw NumericalError("normal-equation solve produced non-finite values");
    }
    return x;
}

} // namespace lamp::linalg
