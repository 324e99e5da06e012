#ifndef QSF_SF_ESTIMATORS_HPP
#define QSF_SF_ESTIMATORS_HPP

#include <cmath>
#include <stdexcept>

#include <Eigen/Core>

#include "qsf/qgaussian.hpp"

namespace qsf {

/// One term of the two-sided SF gradient sum.
template <typename Scalar>
using GradientIncrement = Vector<Scalar>;

/// One term of the two-sided SF Hessian sum. Symmetric.
template <typename Scalar>
using HessianIncrement = Matrix<Scalar>;

/// H(eta): (2q/(N+2-Nq)) eta eta^T / rho^2 - I / rho.
///
/// Reduces to eta eta^T - I at q = 1. Only rho > 0 is accepted; the
/// guarantees of the Hessian estimator hold for q in (0,1) u (1, 1+2/N).
template <typename Scalar>
Matrix<Scalar> h_matrix(const QGaussianSpec<Scalar>& spec, const Perturbation<Scalar>& pert) {
  if (pert.eta.size() != spec.dim()) throw std::invalid_argument("h_matrix: length mismatch");
  if (!(pert.rho > Scalar(0))) throw std::domain_error("h_matrix: rho must be positive");
  const Scalar r = pert.rho;
  const Scalar k = Scalar(2) * spec.q() / (spec.scale() * r * r);
  const int n = spec.dim();
  Matrix<Scalar> h(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < j; ++i) h(i, j) = h(j, i) = k * (pert.eta[i] * pert.eta[j]);
    h(j, j) = k * (pert.eta[j] * pert.eta[j]) - Scalar(1) / r;
  }
  return h;
}

/// eta (J+ - J-) / (beta (N+2-Nq) rho).
template <typename Scalar>
GradientIncrement<Scalar> grad_increment(const QGaussianSpec<Scalar>& spec,
                                         const Perturbation<Scalar>& pert, Scalar cost_plus,
                                         Scalar cost_minus) {
  if (pert.rho == Scalar(0)) throw std::domain_error("grad_increment: rho is zero");
  return pert.eta * ((cost_plus - cost_minus) / (spec.beta() * spec.scale() * pert.rho));
}

/// H(eta) (J+ + J-) / (beta^2 (N+2-Nq)).
template <typename Scalar>
HessianIncrement<Scalar> hess_increment(const QGaussianSpec<Scalar>& spec,
                                        const Perturbation<Scalar>& pert, Scalar cost_plus,
                                        Scalar cost_minus) {
  const Scalar b = spec.beta();
  return h_matrix(spec, pert) * ((cost_plus + cost_minus) / (b * b * spec.scale()));
}

/// Monte-Carlo estimate of the two-sided smoothed functional
/// 0.5 E[J(theta + beta eta) + J(theta - beta eta)].
template <typename Scalar, typename Objective, typename Urbg>
Scalar smoothed_value(Objective&& objective, const QGaussianSpec<Scalar>& spec,
                      const Vector<Scalar>& theta, long num_samples, Urbg& rng) {
  if (num_samples < 1) throw std::invalid_argument("smoothed_value: num_samples must be >= 1");
  Scalar sum(0);
  for (long i = 0; i < num_samples; ++i) {
    const auto p = sample(spec, rng);
    const Vector<Scalar> step = spec.beta() * p.eta;
    sum += (objective(Vector<Scalar>(theta + step)) + objective(Vector<Scalar>(theta - step))) /
           Scalar(2);
  }
  return sum / Scalar(num_samples);
}

/// Sample mean and standard error of both estimators over L perturbations.
template <typename Scalar>
struct BatchEstimate {
  Vector<Scalar> gradient;
  Matrix<Scalar> hessian;
  Vector<Scalar> gradient_se;
  Matrix<Scalar> hessian_se;
};

template <typename Scalar, typename Objective, typename Urbg>
BatchEstimate<Scalar> batch_estimate(Objective&& objective, const QGaussianSpec<Scalar>& spec,
                                     const Vector<Scalar>& theta, long num_samples, Urbg& rng) {
  if (num_samples < 1) throw std::invalid_argument("batch_estimate: L must be >= 1");
  if (theta.size() != spec.dim()) throw std::invalid_argument("batch_estimate: length mismatch");
  const int n = spec.dim();
  // Welford accumulators.
  Vector<Scalar> g_mean = Vector<Scalar>::Zero(n), g_m2 = Vector<Scalar>::Zero(n);
  Matrix<Scalar> h_mean = Matrix<Scalar>::Zero(n, n), h_m2 = Matrix<Scalar>::Zero(n, n);
  for (long i = 0; i < num_samples; ++i) {
    const auto p = sample(spec, rng);
    const Vector<Scalar> step = spec.beta() * p.eta;
    const Scalar plus = objective(Vector<Scalar>(theta + step));
    const Scalar minus = objective(Vector<Scalar>(theta - step));
    const Scalar w = Scalar(1) / Scalar(i + 1);

    const Vector<Scalar> g = grad_increment(spec, p, plus, minus);
    const Vector<Scalar> dg = g - g_mean;
    g_mean += w * dg;
    g_m2.array() += dg.array() * (g - g_mean).array();

    const Matrix<Scalar> h = hess_increment(spec, p, plus, minus);
    const Matrix<Scalar> dh = h - h_mean;
    h_mean += w * dh;
    h_m2.array() += dh.array() * (h - h_mean).array();
  }
  BatchEstimate<Scalar> out{g_mean, h_mean, Vector<Scalar>::Zero(n), Matrix<Scalar>::Zero(n, n)};
  if (num_samples > 1) {
    const Scalar denom = Scalar(num_samples - 1) * Scalar(num_samples);
    out.gradient_se = (g_m2.array() / denom).sqrt().matrix();
    out.hessian_se = (h_m2.array() / denom).sqrt().matrix();
  }
  return out;
}

template <typename Scalar, typename Objective, typename Urbg>
Vector<Scalar> batch_gradient(Objective&& objective, const QGaussianSpec<Scalar>& spec,
                              const Vector<Scalar>& theta, long num_samples, Urbg& rng) {
  if (num_samples < 1) throw std::invalid_argument("batch_gradient: L must be >= 1");
  Vector<Scalar> sum = Vector<Scalar>::Zero(spec.dim());
  for (long i = 0; i < num_samples; ++i) {
    const auto p = sample(spec, rng);
    const Vector<Scalar> step = spec.beta() * p.eta;
    sum += grad_increment(spec, p, objective(Vector<Scalar>(theta + step)),
                          objective(Vector<Scalar>(theta - step)));
  }
  return sum / Scalar(num_samples);
}

template <typename Scalar, typename Objective, typename Urbg>
Matrix<Scalar> batch_hessian(Objective&& objective, const QGaussianSpec<Scalar>& spec,
                             const Vector<Scalar>& theta, long num_samples, Urbg& rng) {
  if (num_samples < 1) throw std::invalid_argument("batch_hessian: L must be >= 1");
  Matrix<Scalar> sum = Matrix<Scalar>::Zero(spec.dim(), spec.dim());
  for (long i = 0; i < num_samples; ++i) {
    const auto p = sample(spec, rng);
    const Vector<Scalar> step = spec.beta() * p.eta;
    sum += hess_increment(spec, p, objective(Vector<Scalar>(theta + step)),
                          objective(Vector<Scalar>(theta - step)));
  }
  return sum / Scalar(num_samples);
}

}  // namespace qsf

#endif  // QSF_SF_ESTIMATORS_HPP
