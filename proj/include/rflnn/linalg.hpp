#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include "rflnn/common.hpp"

namespace rflnn {

// tanh through one vectorized exp; std::tanh is scalar in Eigen for double and dominated
// feature-map cost. Near zero 1 - e cancels, so small inputs fall back to std::tanh.
template <typename Derived>
MatrixX<typename Derived::Scalar> fast_tanh(const Eigen::MatrixBase<Derived>& z) {
    using Scalar = typename Derived::Scalar;
    const auto a = z.array();
    const Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic> e = (Scalar(-2) * a.abs()).exp();
    MatrixX<Scalar> t = (a.sign() * ((Scalar(1) - e) / (Scalar(1) + e))).matrix();
    for (Index j = 0; j < t.cols(); ++j)
        for (Index i = 0; i < t.rows(); ++i)
            if (std::abs(z(i, j)) < Scalar(0.25)) t(i, j) = std::tanh(z(i, j));
    return t;
}

template <typename Derived>
MatrixX<typename Derived::Scalar> activate(const Eigen::MatrixBase<Derived>& z, Activation kind) {
    using Scalar = typename Derived::Scalar;
    switch (kind) {
    case Activation::identity:
        return z;
    case Activation::tanh:
        return fast_tanh(z);
    case Activation::sigmoid:
        // Written through tanh so it never overflows for large |z|.
        return (Scalar(0.5) * (fast_tanh(Scalar(0.5) * z).array() + Scalar(1))).matrix();
    }
    throw ConfigError("unknown activation kind");
}

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
    return m.allFinite();
}

/// Moore-Penrose pseudoinverse with singular values <= abs_tol treated as zero.
template <typename Derived>
MatrixX<typename Derived::Scalar> pinv_abs(const Eigen::MatrixBase<Derived>& a,
                                           typename Derived::Scalar abs_tol) {
    using Scalar = typename Derived::Scalar;
    if (a.size() == 0) return MatrixX<Scalar>::Zero(a.cols(), a.rows());
    Eigen::BDCSVD<MatrixX<Scalar>> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> inv(s.size());
    for (Index i = 0; i < s.size(); ++i) inv(i) = s(i) > abs_tol ? Scalar(1) / s(i) : Scalar(0);
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

/// Moore-Penrose pseudoinverse via SVD; singular values below rtol * sigma_max are dropped.
template <typename Derived>
MatrixX<typename Derived::Scalar> pinv(const Eigen::MatrixBase<Derived>& a,
                                       typename Derived::Scalar rtol = 1e-12) {
    using Scalar = typename Derived::Scalar;
    if (!a.allFinite()) throw NumericError("pinv: non-finite input");
    if (a.size() == 0) return MatrixX<Scalar>::Zero(a.cols(), a.rows());
    Eigen::BDCSVD<MatrixX<Scalar>> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    const Scalar cutoff = s.size() > 0 ? rtol * s(0) : Scalar(0);
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> inv(s.size());
    for (Index i = 0; i < s.size(); ++i)
        inv(i) = (s(i) > cutoff && s(i) > Scalar(0)) ? Scalar(1) / s(i) : Scalar(0);
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

/// Frobenius-relative defect of the identity A+ A A+ = A+.
template <typename DA, typename DP>
typename DA::Scalar pinv_defect(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DP>& a_pinv) {
    const auto denom = a_pinv.norm();
    if (denom == 0) return 0;
    return (a_pinv * a * a_pinv - a_pinv).norm() / denom;
}

/// Ridge regression (lambda I + A^T A)^{-1} A^T Y.
///
/// lambda == 0 is the plain least-squares problem; its minimum-norm solution
/// is taken through the pseudoinverse so rank-deficient A does not fail.
template <typename DA, typename DY>
MatrixX<typename DA::Scalar> ridge_solve(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DY>& y,
                                         typename DA::Scalar lambda, typename DA::Scalar pinv_rtol = 1e-12) {
    using Scalar = typename DA::Scalar;
    if (a.rows() != y.rows())
        throw UsageError("ridge_solve: A has " + std::to_string(a.rows()) + " rows but Y has " +
                         std::to_string(y.rows()));
    if (!(lambda >= 0)) throw ConfigError("ridge_solve: lambda must be nonnegative");
    if (!a.allFinite() || !y.allFinite()) throw NumericError("ridge_solve: non-finite input");

    if (lambda == Scalar(0)) return pinv(a, pinv_rtol) * y;

    MatrixX<Scalar> normal = MatrixX<Scalar>(a.cols(), a.cols());
    normal.template triangularView<Eigen::Lower>() = a.transpose() * a;
    normal.diagonal().array() += lambda;
    const MatrixX<Scalar> rhs = a.transpose() * y;

    Eigen::LLT<MatrixX<Scalar>, Eigen::Lower> llt(normal);
    if (llt.info() == Eigen::Success) return llt.solve(rhs);
    normal.template triangularView<Eigen::StrictlyUpper>() =
        normal.template triangularView<Eigen::StrictlyLower>().transpose();
    Eigen::LDLT<MatrixX<Scalar>> ldlt(normal);
    if (ldlt.info() != Eigen::Success) throw NumericError("ridge_solve: normal matrix factorization failed");
    return ldlt.solve(rhs);
}

/// Result of appending columns to a least-squares design whose pseudoinverse is known.
template <typename Scalar>
struct ColumnGrowth {
    MatrixX<Scalar> pinv;     ///< pseudoinverse of [A, new]
    MatrixX<Scalar> weights;  ///< updated output weights
    bool dependent = false;   ///< new columns judged to lie in range(A) (C = 0 branch)
};

/// Block pseudoinverse update for A -> [A, a].
///
///   D = A+ a,  C = a - A D
///   B^T = C+                               if C has full column rank
///   B^T = (I + D^T D)^{-1} D^T A+          if C = 0
///   (A_new)+ = [A+ - D B^T ; B^T],   W_new = [W - D B^T Y ; B^T Y]
///
/// Partially rank-deficient C uses the general (Cline) form, which reduces to
/// the two cases above. C counts as zero when ||C||_F <= zero_tol * ||A||_F;
/// the same scale bounds the singular values of C that are kept.
template <typename Scalar>
ColumnGrowth<Scalar> grow_columns(const MatrixX<Scalar>& a, const MatrixX<Scalar>& a_pinv,
                                  const MatrixX<Scalar>& weights, const MatrixX<Scalar>& new_cols,
                                  const MatrixX<Scalar>& y, Scalar zero_tol = Scalar(1e-8)) {
    if (a_pinv.rows() != a.cols() || a_pinv.cols() != a.rows())
        throw StateError("grow_columns: cached pseudoinverse does not match the design matrix");
    if (new_cols.rows() != a.rows() || y.rows() != a.rows())
        throw UsageError("grow_columns: row count mismatch");

    using Mat = MatrixX<Scalar>;
    const Index q = new_cols.cols();
    const Mat d = a_pinv * new_cols;
    const Mat c = new_cols - a * d;
    const Scalar scale = a.norm();
    const bool dependent = c.norm() <= zero_tol * scale;

    Mat bt;
    if (dependent) {
        Mat gram = Mat::Identity(q, q) + d.transpose() * d;
        bt = gram.llt().solve(d.transpose() * a_pinv);
    } else {
        const Mat c_pinv = pinv_abs(c, zero_tol * scale);
        const Mat cpc = c_pinv * c;
        const Scalar rank_gap = (Mat::Identity(q, q) - cpc).norm();
        if (rank_gap < Scalar(1e-6)) {
            bt = c_pinv;
        } else {
            const Mat proj = Mat::Identity(q, q) - cpc;
            const Mat z = (Mat::Identity(q, q) + proj * d.transpose() * d * proj).inverse();
            const Mat left = Mat::Identity(a.rows(), a.rows()) - new_cols * c_pinv;
            bt = c_pinv + proj * z * d.transpose() * a_pinv * left;
        }
    }

    ColumnGrowth<Scalar> out;
    out.dependent = dependent;
    out.pinv.resize(a_pinv.rows() + q, a_pinv.cols());
    out.pinv.topRows(a_pinv.rows()) = a_pinv - d * bt;
    out.pinv.bottomRows(q) = bt;
    const Mat bty = bt * y;
    out.weights.resize(weights.rows() + q, weights.cols());
    out.weights.topRows(weights.rows()) = weights - d * bty;
    out.weights.bottomRows(q) = bty;
    return out;
}

/// Ridge regression whose design grows by column blocks.
///
/// Keeps the Cholesky factor of (lambda I + B^T B) and extends it blockwise,
/// so re-solving after each append costs O(P^2) instead of a refactorization.
template <typename Scalar>
class IncrementalRidge {
public:
    using Mat = MatrixX<Scalar>;

    IncrementalRidge(Mat targets, Scalar lambda)
        : targets_(std::move(targets)), lambda_(lambda), design_(targets_.rows(), 0), factor_(0, 0),
          rhs_(0, targets_.cols()) {
        if (!(lambda > 0)) throw ConfigError("IncrementalRidge: lambda must be positive");
    }

    // Storage grows geometrically; reserving the final width up front avoids every copy.
    void reserve(Index cols) {
        if (cols <= design_.cols()) return;
        Mat d(targets_.rows(), cols);
        d.leftCols(columns_) = design_.leftCols(columns_);
        design_.swap(d);
        Mat f(cols, cols);
        f.topLeftCorner(columns_, columns_) = factor_.topLeftCorner(columns_, columns_);
        factor_.swap(f);
        Mat r(cols, targets_.cols());
        r.topRows(columns_) = rhs_.topRows(columns_);
        rhs_.swap(r);
    }

    void append(const Mat& cols) {
        if (cols.rows() != targets_.rows()) throw UsageError("IncrementalRidge: row count mismatch");
        const Index p = columns_;
        const Index q = cols.cols();

        Mat l21t(p, q);
        Mat schur(q, q);
        schur.template triangularView<Eigen::Lower>() = cols.transpose() * cols;
        schur.diagonal().array() += lambda_;
        if (p > 0) {
            l21t.noalias() = design_.leftCols(p).transpose() * cols;
            factor_.topLeftCorner(p, p).template triangularView<Eigen::Lower>().solveInPlace(l21t);
            schur.template triangularView<Eigen::Lower>() -= l21t.transpose() * l21t;
        }
        Eigen::LLT<Mat> llt(schur);  // reads the lower triangle only
        if (llt.info() != Eigen::Success)
            throw NumericError("IncrementalRidge: Gram update is not positive definite; increase lambda");

        if (p + q > design_.cols()) reserve(std::max(p + q, 2 * design_.cols()));
        factor_.block(0, p, p, q).setZero();
        factor_.block(p, 0, q, p) = l21t.transpose();
        factor_.block(p, p, q, q) = llt.matrixL();
        factor_.block(p, p, q, q).template triangularView<Eigen::StrictlyUpper>().setZero();
        rhs_.middleRows(p, q).noalias() = cols.transpose() * targets_;
        design_.middleCols(p, q) = cols;
        columns_ += q;
    }

    Mat solve() const {
        Mat w = rhs_.topRows(columns_);
        const auto lower = factor_.topLeftCorner(columns_, columns_).template triangularView<Eigen::Lower>();
        lower.solveInPlace(w);
        lower.transpose().solveInPlace(w);
        return w;
    }

    Mat design() const { return design_.leftCols(columns_); }
    Index columns() const { return columns_; }

private:
    Mat targets_;
    Scalar lambda_;
    Mat design_;  // only the first columns_ columns are live
    Index columns_ = 0;
    Mat factor_;
    Mat rhs_;
};

} // namespace rflnn
