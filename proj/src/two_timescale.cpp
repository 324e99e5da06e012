#include "qsf/two_timescale.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace qsf {

StepSchedule::StepSchedule(double exp, double g) : exponent(exp), gain(g) {
  if (!(exp > 0.5 && exp <= 1.0))
    throw std::invalid_argument("step schedule: exponent must lie in (0.5, 1]");
  if (!(g >= 0.0) || !std::isfinite(g)) throw std::invalid_argument("step schedule: gain must be >= 0");
}

double step_size(const StepSchedule& schedule, long n) {
  if (n < 0) throw std::invalid_argument("step_size: n must be >= 0");
  return schedule.gain / std::pow(static_cast<double>(n + 1), schedule.exponent);
}

std::string to_string(Algorithm a) { return a == Algorithm::nqsf2 ? "nqsf2" : "gqsf2"; }

Algorithm algorithm_from_string(const std::string& name) {
  if (name == "nqsf2") return Algorithm::nqsf2;
  if (name == "gqsf2") return Algorithm::gqsf2;
  throw std::invalid_argument("unknown algorithm '" + name + "' (expected nqsf2 or gqsf2)");
}

void OptimizerConfig::validate() const {
  if (box.dim() != spec.dim()) throw std::invalid_argument("optimizer: box and q-Gaussian dimensions differ");
  if (outer_iterations < 0) throw std::invalid_argument("optimizer: outer iterations must be >= 0");
  if (inner_iterations < 1) throw std::invalid_argument("optimizer: inner iterations must be >= 1");
  // The Hessian estimator needs E[1/rho^2] finite, which fails for q <= 0.
  if (algorithm == Algorithm::nqsf2 && !(spec.q() > 0.0)) {
    std::ostringstream msg;
    msg << "optimizer: nqsf2 requires q in (0, 1 + 2/N), got q=" << spec.q();
    throw std::invalid_argument(msg.str());
  }
}

EstimatorState fast_update(EstimatorState state, double b_n, double c_n, const GradientIncrement<double>& g_inc,
                           const HessianIncrement<double>& h_inc) {
  if (!(b_n > 0.0 && b_n <= 1.0) || !(c_n > 0.0 && c_n <= 1.0))
    throw std::invalid_argument("fast_update: step sizes must lie in (0, 1]");
  if (!g_inc.allFinite() || !h_inc.allFinite()) throw std::domain_error("fast_update: non-finite increment");
  state.z = (1.0 - b_n) * state.z + b_n * g_inc;
  state.w = (1.0 - c_n) * state.w + c_n * h_inc;
  return state;
}

double Trajectory::z_sup_norm() const {
  double m = 0.0;
  for (const auto& p : points) m = std::max(m, p.z_norm);
  return m;
}

double Trajectory::w_sup_norm() const {
  double m = 0.0;
  for (const auto& p : points) m = std::max(m, p.w_norm);
  return m;
}

double distance_to_target(const Eigen::VectorXd& theta, const Eigen::VectorXd& target) {
  if (theta.size() != target.size()) throw std::invalid_argument("distance_to_target: length mismatch");
  return (theta - target).norm();
}

namespace {

[[noreturn]] void diverged(long n, const char* what) {
  std::ostringstream msg;
  msg << "two-timescale run diverged: non-finite " << what << " at outer iteration " << n;
  throw std::runtime_error(msg.str());
}

}  // namespace

Trajectory run(const OptimizerConfig& config, const SimSystem& system, const Eigen::VectorXd& initial_theta,
               const std::optional<Eigen::VectorXd>& target) {
  config.validate();
  const auto& spec = config.spec;
  const int dim = spec.dim();
  if (system.dim() != dim) throw std::invalid_argument("run: system and optimizer dimensions differ");
  if (!config.box.contains(initial_theta)) throw std::invalid_argument("run: initial theta must lie in C");
  if (target && target->size() != dim) throw std::invalid_argument("run: target length mismatch");

  const bool newton = config.algorithm == Algorithm::nqsf2;
  const bool jacobi = config.pd_policy.variant == PdVariant::jacobi;
  const double beta = spec.beta();

  Rng perturbation_rng(derive_seed(config.seed, 0));
  const auto replica_plus = system.create_replica(derive_seed(config.seed, 1));
  const auto replica_minus = system.create_replica(derive_seed(config.seed, 2));

  EstimatorState est = EstimatorState::zero(dim);
  // Under the Jacobi policy only the diagonal of W survives projection, so
  // the off-diagonal recursion is skipped.
  Eigen::VectorXd w_diag = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd theta = initial_theta;

  Trajectory traj;
  traj.points.reserve(static_cast<std::size_t>(config.outer_iterations) + 1);
  auto record = [&](long n) {
    const std::optional<double> dist =
        target ? std::optional<double>(distance_to_target(theta, *target)) : std::nullopt;
    const double w_norm = newton ? (jacobi ? w_diag.norm() : est.w.norm()) : 0.0;
    traj.points.push_back({n, theta, dist, est.z.norm(), w_norm});
  };
  record(0);

  Eigen::VectorXd theta_plus(dim), theta_minus(dim);
  Eigen::MatrixXd h_unit;
  Eigen::VectorXd h_unit_diag;

  for (long n = 0; n < config.outer_iterations; ++n) {
    const Perturbation<double> pert = sample(spec, perturbation_rng);
    const double a_n = step_size(config.a_schedule, n);
    const double b_n = step_size(config.b_schedule, n);
    const double c_n = step_size(config.c_schedule, n);

    theta_plus = project_box(config.box, theta + beta * pert.eta);
    theta_minus = project_box(config.box, theta - beta * pert.eta);

    const double grad_coeff = 1.0 / (beta * spec.scale() * pert.rho);
    if (newton) {
      h_unit = h_matrix(spec, pert) / (beta * beta * spec.scale());
      if (!h_unit.allFinite()) diverged(n, "H(eta)");
      if (jacobi) h_unit_diag = h_unit.diagonal();
    }

    for (long m = 0; m < config.inner_iterations; ++m) {
      const double cost_plus = replica_plus->observe_cost(theta_plus);
      const double cost_minus = replica_minus->observe_cost(theta_minus);
      if (!std::isfinite(cost_plus) || !std::isfinite(cost_minus)) diverged(n, "cost");

      est.z = (1.0 - b_n) * est.z + (b_n * (cost_plus - cost_minus) * grad_coeff) * pert.eta;
      if (newton) {
        const double s = c_n * (cost_plus + cost_minus);
        if (jacobi)
          w_diag = (1.0 - c_n) * w_diag + s * h_unit_diag;
        else
          est.w = (1.0 - c_n) * est.w + s * h_unit;
      }
    }
    if (!est.z.allFinite()) diverged(n, "Z");

    if (newton) {
      if (jacobi) est.w = w_diag.asDiagonal();
      if (!est.w.allFinite()) diverged(n, "W");
      est.w = project_pd(config.pd_policy, est.w);
      if (jacobi) w_diag = est.w.diagonal();
      theta = project_box(config.box, theta - a_n * newton_direction(config.pd_policy, est.w, est.z));
    } else {
      theta = project_box(config.box, theta - a_n * est.z);
    }
    if (!theta.allFinite()) diverged(n, "theta");
    record(n + 1);
  }
  return traj;
}

}  // namespace qsf
