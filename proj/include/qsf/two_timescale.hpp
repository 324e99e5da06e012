#ifndef QSF_TWO_TIMESCALE_HPP
#define QSF_TWO_TIMESCALE_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "qsf/markov_env.hpp"
#include "qsf/projections.hpp"
#include "qsf/qgaussian.hpp"
#include "qsf/sf_estimators.hpp"

namespace qsf {

/// n -> gain / (n+1)^exponent. Robbins-Monro conditions hold for exponent
/// in (0.5, 1]. gain defaults to 1; gain 0 freezes the iterate it drives.
struct StepSchedule {
  double exponent = 1.0;
  double gain = 1.0;

  StepSchedule() = default;
  explicit StepSchedule(double exp, double g = 1.0);
};

double step_size(const StepSchedule& schedule, long n);

enum class Algorithm { nqsf2, gqsf2 };

std::string to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& name);

struct OptimizerConfig {
  Algorithm algorithm = Algorithm::nqsf2;
  QGaussianSpec<double> spec{20, 1.0, 0.1};
  BoxConstraint<double> box = BoxConstraint<double>::uniform(20, 0.1, 0.6);
  PdProjectionPolicy<double> pd_policy{PdVariant::jacobi, 0.1};
  StepSchedule a_schedule{1.0};   ///< parameter
  StepSchedule b_schedule{0.85};  ///< gradient estimate Z
  StepSchedule c_schedule{0.65};  ///< Hessian estimate W
  long outer_iterations = 5000;   ///< M
  long inner_iterations = 100;    ///< L
  std::uint64_t seed = 1;

  /// Throws std::invalid_argument when the configuration is not admissible
  /// for its algorithm (q range, dimensions, counts).
  void validate() const;
};

/// Fast-timescale iterates.
struct EstimatorState {
  Eigen::VectorXd z;
  Eigen::MatrixXd w;

  static EstimatorState zero(int dim) {
    return {Eigen::VectorXd::Zero(dim), Eigen::MatrixXd::Zero(dim, dim)};
  }
};

/// Z <- (1-b) Z + b g ; W <- (1-c) W + c h. The P_pd step is applied by
/// the caller once per outer iteration.
EstimatorState fast_update(EstimatorState state, double b_n, double c_n,
                           const GradientIncrement<double>& g_inc, const HessianIncrement<double>& h_inc);

struct TrajectoryPoint {
  long n;
  Eigen::VectorXd theta;
  std::optional<double> distance;
  double z_norm;
  double w_norm;
};

struct Trajectory {
  std::vector<TrajectoryPoint> points;

  const Eigen::VectorXd& final_theta() const { return points.back().theta; }
  double z_sup_norm() const;
  double w_sup_norm() const;
};

double distance_to_target(const Eigen::VectorXd& theta, const Eigen::VectorXd& target);

/// Runs NqSF2 (Newton) or GqSF2 (gradient) for M outer iterations of L
/// simulation epochs each, driving two independent replicas of `system`
/// at P_C(theta +/- beta eta). `target`, when given, is used only for the
/// recorded distance column.
///
/// Throws std::runtime_error if any iterate becomes non-finite.
Trajectory run(const OptimizerConfig& config, const SimSystem& system, const Eigen::VectorXd& initial_theta,
               const std::optional<Eigen::VectorXd>& target = std::nullopt);

}  // namespace qsf

#endif  // QSF_TWO_TIMESCALE_HPP
