#pragma once

#include <Eigen/Core>

#include <cmath>

namespace ccsim {

/// Dense LU factorization with partial (row) pivoting, P A = L U, stored
/// in place. Unlike Eigen::PartialPivLU this one reports rank deficiency:
/// a pivot smaller than `relative_pivot_tol * ||A||_inf` marks the matrix
/// singular and info() returns Eigen::NumericalIssue.
template <typename Scalar>
class PartialPivotLu {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using RealScalar = typename Eigen::NumTraits<Scalar>::Real;

  PartialPivotLu() = default;

  template <typename Derived>
  explicit PartialPivotLu(const Eigen::MatrixBase<Derived>& a,
                          RealScalar relative_pivot_tol = RealScalar(1e-13)) {
    compute(a, relative_pivot_tol);
  }

  template <typename Derived>
  PartialPivotLu& compute(const Eigen::MatrixBase<Derived>& a,
                          RealScalar relative_pivot_tol = RealScalar(1e-13)) {
    eigen_assert(a.rows() == a.cols());
    lu_ = a;
    const Eigen::Index n = lu_.rows();
    perm_.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) perm_(i) = i;
    norm_inf_ = n == 0 ? RealScalar(0) : lu_.cwiseAbs().rowwise().sum().maxCoeff();
    threshold_ = relative_pivot_tol * norm_inf_;
    info_ = Eigen::Success;
    failed_column_ = -1;

    for (Eigen::Index k = 0; k < n; ++k) {
      Eigen::Index pivot_row = k;
      const RealScalar pivot_mag = lu_.col(k).tail(n - k).cwiseAbs().maxCoeff(&pivot_row);
      pivot_row += k;
      if (!(pivot_mag >= threshold_) || pivot_mag == RealScalar(0)) {
        info_ = Eigen::NumericalIssue;
        failed_column_ = k;
        return *this;
      }
      if (pivot_row != k) {
        lu_.row(k).swap(lu_.row(pivot_row));
        std::swap(perm_(k), perm_(pivot_row));
      }
      const Eigen::Index rest = n - k - 1;
      if (rest == 0) continue;
      lu_.col(k).tail(rest) /= lu_(k, k);
      lu_.bottomRightCorner(rest, rest).noalias() -=
          lu_.col(k).tail(rest) * lu_.row(k).tail(rest);
    }
    return *this;
  }

  Eigen::ComputationInfo info() const { return info_; }

  /// First column whose pivot fell below the threshold, or -1.
  Eigen::Index failed_column() const { return failed_column_; }

  RealScalar norm_inf() const { return norm_inf_; }

  template <typename Derived>
  Vector solve(const Eigen::MatrixBase<Derived>& b) const {
    eigen_assert(info_ == Eigen::Success);
    const Eigen::Index n = lu_.rows();
    Vector x(n);
    for (Eigen::Index i = 0; i < n; ++i) x(i) = b(perm_(i));
    lu_.template triangularView<Eigen::UnitLower>().solveInPlace(x);
    lu_.template triangularView<Eigen::Upper>().solveInPlace(x);
    return x;
  }

  const Matrix& packed() const { return lu_; }
  const Eigen::Matrix<Eigen::Index, Eigen::Dynamic, 1>& permutation() const { return perm_; }

 private:
  Matrix lu_;
  Eigen::Matrix<Eigen::Index, Eigen::Dynamic, 1> perm_;
  RealScalar norm_inf_ = 0;
  RealScalar threshold_ = 0;
  Eigen::ComputationInfo info_ = Eigen::InvalidInput;
  Eigen::Index failed_column_ = -1;
};

}  // namespace ccsim
