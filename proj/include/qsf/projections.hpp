#ifndef QSF_PROJECTIONS_HPP
#define QSF_PROJECTIONS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "qsf/qgaussian.hpp"

namespace qsf {

/// Axis-aligned box C = prod [lower_i, upper_i].
template <typename Scalar = double>
class BoxConstraint {
 public:
  BoxConstraint(Vector<Scalar> lower, Vector<Scalar> upper)
      : lower_(std::move(lower)), upper_(std::move(upper)) {
    if (lower_.size() != upper_.size() || lower_.size() == 0)
      throw std::invalid_argument("box: bound lengths must match and be nonzero");
    if (!lower_.allFinite() || !upper_.allFinite() || !(lower_.array() < upper_.array()).all())
      throw std::invalid_argument("box: lower < upper must hold componentwise");
  }

  static BoxConstraint uniform(int dim, Scalar lower, Scalar upper) {
    return BoxConstraint(Vector<Scalar>::Constant(dim, lower), Vector<Scalar>::Constant(dim, upper));
  }

  int dim() const { return static_cast<int>(lower_.size()); }
  const Vector<Scalar>& lower() const { return lower_; }
  const Vector<Scalar>& upper() const { return upper_; }

  template <typename Derived>
  bool contains(const Eigen::MatrixBase<Derived>& theta) const {
    return theta.size() == lower_.size() && (theta.array() >= lower_.array()).all() &&
           (theta.array() <= upper_.array()).all();
  }

 private:
  Vector<Scalar> lower_;
  Vector<Scalar> upper_;
};

enum class PdVariant { jacobi, full_spectral };

/// Projection onto symmetric matrices with minimum eigenvalue >= epsilon.
template <typename Scalar = double>
struct PdProjectionPolicy {
  PdVariant variant = PdVariant::jacobi;
  Scalar epsilon = Scalar(0.1);

  PdProjectionPolicy() = default;
  PdProjectionPolicy(PdVariant v, Scalar eps) : variant(v), epsilon(eps) {
    if (!(eps > Scalar(0)) || !std::isfinite(eps))
      throw std::invalid_argument("pd projection: epsilon must be positive");
  }
};

template <typename Scalar, typename Derived>
Vector<Scalar> project_box(const BoxConstraint<Scalar>& box, const Eigen::MatrixBase<Derived>& theta) {
  if (theta.size() != box.dim()) throw std::invalid_argument("project_box: length mismatch");
  return theta.cwiseMax(box.lower()).cwiseMin(box.upper());
}

namespace detail {

// Slack allowed when deciding that a symmetric matrix already meets the
// eigenvalue floor. Covers the round-off of reassembling V diag(l) V^T.
template <typename Scalar>
Scalar floor_slack(Scalar spectral_radius) {
  return Scalar(64) * std::numeric_limits<Scalar>::epsilon() * std::max(Scalar(1), spectral_radius);
}

}  // namespace detail

/// P_pd. Jacobi zeroes the off-diagonal and clamps the diagonal to
/// [epsilon, inf). Full spectral symmetrizes, clamps eigenvalues from below
/// and reassembles; inputs that already meet the floor are returned as is,
/// which keeps the operator exactly idempotent.
template <typename Scalar>
Matrix<Scalar> project_pd(const PdProjectionPolicy<Scalar>& policy, const Matrix<Scalar>& w) {
  if (w.rows() != w.cols()) throw std::invalid_argument("project_pd: matrix must be square");
  if (!w.allFinite()) throw std::domain_error("project_pd: non-finite entries");
  const Scalar eps = policy.epsilon;

  if (policy.variant == PdVariant::jacobi) {
    Matrix<Scalar> out = Matrix<Scalar>::Zero(w.rows(), w.cols());
    out.diagonal() = w.diagonal().cwiseMax(eps);
    return out;
  }

  Matrix<Scalar> sym = (w + w.transpose()) / Scalar(2);
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(sym);
  if (es.info() != Eigen::Success) throw std::domain_error("project_pd: eigensolver failed");
  const Vector<Scalar>& lambda = es.eigenvalues();
  const Scalar radius = lambda.cwiseAbs().maxCoeff();
  if (lambda.minCoeff() >= eps - detail::floor_slack(radius)) return sym;

  const Matrix<Scalar>& v = es.eigenvectors();
  Matrix<Scalar> out = v * lambda.cwiseMax(eps).asDiagonal() * v.transpose();
  return (out + out.transpose()) / Scalar(2);
}

/// Solves W d = z for a W returned by project_pd.
template <typename Scalar>
Vector<Scalar> newton_direction(const PdProjectionPolicy<Scalar>& policy,
                                const Matrix<Scalar>& w_projected, const Vector<Scalar>& z) {
  const int n = static_cast<int>(z.size());
  if (w_projected.rows() != n || w_projected.cols() != n)
    throw std::invalid_argument("newton_direction: dimension mismatch");
  const Scalar eps = policy.epsilon;

  if (policy.variant == PdVariant::jacobi) {
    Matrix<Scalar> off = w_projected;
    off.diagonal().setZero();
    if (!off.isZero(0) || (w_projected.diagonal().array() < eps).any())
      throw std::domain_error("newton_direction: matrix is not a Jacobi projection");
    return z.cwiseQuotient(w_projected.diagonal());
  }

  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(w_projected);
  if (es.info() != Eigen::Success) throw std::domain_error("newton_direction: eigensolver failed");
  const Vector<Scalar>& lambda = es.eigenvalues();
  const Scalar radius = lambda.cwiseAbs().maxCoeff();
  if (lambda.minCoeff() < eps - detail::floor_slack(radius))
    throw std::domain_error("newton_direction: matrix violates the eigenvalue floor");
  const Matrix<Scalar>& v = es.eigenvectors();
  return v * (v.transpose() * z).cwiseQuotient(lambda);
}

}  // namespace qsf

#endif  // QSF_PROJECTIONS_HPP
