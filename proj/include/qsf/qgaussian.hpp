#ifndef QSF_QGAUSSIAN_HPP
#define QSF_QGAUSSIAN_HPP

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace qsf {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Standard N-dimensional q-Gaussian (q-mean 0, q-covariance I) together
/// with the smoothing width beta that callers apply as theta +/- beta * eta.
///
/// Admissible q is any real below 1 + 2/N. q == 1 is handled as its own
/// branch (the Gaussian) rather than as a limit.
template <typename Scalar = double>
class QGaussianSpec {
 public:
  QGaussianSpec(int dim, Scalar q, Scalar beta = Scalar(1))
      : dim_(dim), q_(q), beta_(beta) {
    if (dim < 1) throw std::invalid_argument("q-Gaussian: dimension must be >= 1");
    if (!std::isfinite(q) || q >= upper_q_bound(dim))
      throw std::invalid_argument("q-Gaussian: q must be finite and below 1 + 2/N (N=" +
                                  std::to_string(dim) + ", q=" + std::to_string(q) + ")");
    if (!(beta > Scalar(0)) || !std::isfinite(beta))
      throw std::invalid_argument("q-Gaussian: beta must be positive");
  }

  /// Exclusive upper bound 1 + 2/N on q.
  static Scalar upper_q_bound(int dim) { return Scalar(1) + Scalar(2) / Scalar(dim); }

  int dim() const { return dim_; }
  Scalar q() const { return q_; }
  Scalar beta() const { return beta_; }
  bool is_gaussian() const { return q_ == Scalar(1); }

  /// N + 2 - Nq; appears in every estimator denominator. Equals 2 at q = 1.
  Scalar scale() const { return Scalar(dim_) + Scalar(2) - Scalar(dim_) * q_; }

  /// Squared radius of the support ball for q < 1, +inf otherwise.
  Scalar support_radius_sq() const {
    if (q_ >= Scalar(1)) return std::numeric_limits<Scalar>::infinity();
    return scale() / (Scalar(1) - q_);
  }

  QGaussianSpec with_beta(Scalar beta) const { return QGaussianSpec(dim_, q_, beta); }

 private:
  int dim_;
  Scalar q_;
  Scalar beta_;
};

/// A sampled standard q-Gaussian direction with its rho factor cached.
template <typename Scalar = double>
struct Perturbation {
  Vector<Scalar> eta;
  Scalar rho;
};

/// rho(eta) = 1 - (1-q) |eta|^2 / (N+2-Nq). Exactly 1 for q == 1.
template <typename Scalar, typename Derived>
Scalar rho(const QGaussianSpec<Scalar>& spec, const Eigen::MatrixBase<Derived>& eta) {
  if (spec.is_gaussian()) return Scalar(1);
  return Scalar(1) - (Scalar(1) - spec.q()) * eta.squaredNorm() / spec.scale();
}

/// K_{q,N}. Gamma ratios go through lgamma so that q close to 1 does not overflow.
template <typename Scalar>
Scalar normalizing_constant(const QGaussianSpec<Scalar>& spec) {
  using std::exp;
  using std::lgamma;
  using std::log;
  const Scalar n = Scalar(spec.dim());
  const Scalar half_n = n / Scalar(2);
  const Scalar q = spec.q();
  const Scalar log_pi = log(std::numbers::pi_v<Scalar>);
  if (spec.is_gaussian()) return exp(half_n * (log(Scalar(2)) + log_pi));
  if (q < Scalar(1)) {
    const Scalar a = (Scalar(2) - q) / (Scalar(1) - q);
    return exp(half_n * (log(spec.scale() / (Scalar(1) - q)) + log_pi) + lgamma(a) -
               lgamma(a + half_n));
  }
  const Scalar a = Scalar(1) / (q - Scalar(1));
  return exp(half_n * (log(spec.scale() / (q - Scalar(1))) + log_pi) + lgamma(a - half_n) -
             lgamma(a));
}

/// Standard q-Gaussian density with the Tsallis cut-off: exactly 0 outside
/// the support when q < 1.
template <typename Scalar, typename Derived>
Scalar density(const QGaussianSpec<Scalar>& spec, const Eigen::MatrixBase<Derived>& x) {
  if (x.size() != spec.dim()) throw std::invalid_argument("q-Gaussian density: length mismatch");
  const Scalar k = normalizing_constant(spec);
  if (spec.is_gaussian()) return std::exp(-x.squaredNorm() / Scalar(2)) / k;
  const Scalar r = rho(spec, x);
  if (r <= Scalar(0)) return Scalar(0);
  return std::pow(r, Scalar(1) / (Scalar(1) - spec.q())) / k;
}

template <typename Scalar, typename Derived>
bool support_contains(const QGaussianSpec<Scalar>& spec, const Eigen::MatrixBase<Derived>& x) {
  if (spec.q() >= Scalar(1)) return true;
  return x.squaredNorm() < spec.support_radius_sq();
}

/// Exact, rejection-free sampler.
///
///   q > 1 : multivariate Student-t, eta = z * sqrt(nu / w), w ~ chi2(nu),
///           nu = 2/(q-1) - N. The scale is 1 since nu (q-1) = N+2-Nq.
///   q < 1 : eta = R s u, u uniform on the sphere, s^2 ~ Beta(N/2, (2-q)/(1-q)),
///           R^2 = (N+2-Nq)/(1-q).
///   q = 1 : standard normal.
template <typename Scalar, typename Urbg>
Perturbation<Scalar> sample(const QGaussianSpec<Scalar>& spec, Urbg& rng) {
  const int n = spec.dim();
  const Scalar q = spec.q();
  std::normal_distribution<Scalar> normal;
  Vector<Scalar> z(n);
  for (int i = 0; i < n; ++i) z[i] = normal(rng);

  if (spec.is_gaussian()) return {std::move(z), Scalar(1)};

  if (q > Scalar(1)) {
    const Scalar nu = Scalar(2) / (q - Scalar(1)) - Scalar(n);
    std::gamma_distribution<Scalar> chi2(nu / Scalar(2), Scalar(2));
    Scalar w;
    do {
      w = chi2(rng);
    } while (!(w > Scalar(0)));
    z *= std::sqrt(nu / w);
    const Scalar r = rho(spec, z);
    return {std::move(z), r};
  }

  // q < 1. The direction comes from z; the squared radial fraction is a Beta
  // variate built from two gammas. s^2 < 1 holds almost surely; the loop only
  // guards against a degenerate draw landing on the boundary.
  std::gamma_distribution<Scalar> ga(Scalar(n) / Scalar(2), Scalar(1));
  std::gamma_distribution<Scalar> gb((Scalar(2) - q) / (Scalar(1) - q), Scalar(1));
  const Scalar radius = std::sqrt(spec.support_radius_sq());
  for (;;) {
    Scalar znorm = z.norm();
    while (!(znorm > Scalar(0))) {
      for (int i = 0; i < n; ++i) z[i] = normal(rng);
      znorm = z.norm();
    }
    const Scalar x = ga(rng);
    const Scalar y = gb(rng);
    const Scalar s2 = x / (x + y);
    Vector<Scalar> eta = z * (radius * std::sqrt(s2) / znorm);
    const Scalar r = rho(spec, eta);
    if (r > Scalar(0) && support_contains(spec, eta)) return {std::move(eta), r};
    for (int i = 0; i < n; ++i) z[i] = normal(rng);
  }
}

/// Closed-form targets for the standard q-Gaussian moments used by the
/// estimator analysis. Entries that require rho^2 in the denominator exist
/// only for q in (0, 1 + 2/N); the cross moment additionally needs N >= 2.
template <typename Scalar = double>
struct MomentTargets {
  Scalar inv_rho;                         ///< E[1/rho] = E[eta_i^2 / rho]
  std::optional<Scalar> eta_sq_rho_sq;    ///< E[eta_i^2 / rho^2]
  std::optional<Scalar> eta_quartic_rho_sq;  ///< E[eta_i^4 / rho^2]
  std::optional<Scalar> eta_cross_rho_sq;    ///< E[eta_i^2 eta_j^2 / rho^2], i != j
};

// E[eta_i^2 / rho^2] is (N+2-Nq)^2 / (4q), squared numerator. This is the
// value forced by E[H(eta)] = 0 and by direct quadrature in one dimension.
template <typename Scalar>
MomentTargets<Scalar> moment_identity_targets(const QGaussianSpec<Scalar>& spec) {
  const Scalar c = spec.scale();
  MomentTargets<Scalar> t{c / Scalar(2), std::nullopt, std::nullopt, std::nullopt};
  if (spec.q() > Scalar(0)) {
    const Scalar second = c * c / (Scalar(4) * spec.q());
    t.eta_sq_rho_sq = second;
    t.eta_quartic_rho_sq = Scalar(3) * second;
    if (spec.dim() >= 2) t.eta_cross_rho_sq = second;
  }
  return t;
}

}  // namespace qsf

#endif  // QSF_QGAUSSIAN_HPP
