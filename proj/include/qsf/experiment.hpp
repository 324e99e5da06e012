#ifndef QSF_EXPERIMENT_HPP
#define QSF_EXPERIMENT_HPP

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "qsf/markov_env.hpp"
#include "qsf/two_timescale.hpp"

namespace qsf {

/// Raised for any malformed or inadmissible experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class EnvironmentKind { queue, quadratic };

/// queue: the two-node network. quadratic: J(theta) = |theta - center|^2
/// plus optional Gaussian observation noise, on a uniform box.
struct EnvironmentConfig {
  EnvironmentKind kind = EnvironmentKind::queue;
  QueueNetworkConfig queue;
  int quadratic_dim = 2;
  double quadratic_center = 0.3;
  double quadratic_noise_sd = 0.0;
  double quadratic_lower = -1.0;
  double quadratic_upper = 1.0;

  int dim() const;
  BoxConstraint<double> box() const;
  Eigen::VectorXd target() const;
  std::unique_ptr<SimSystem> make_system() const;
};

/// One experiment: base optimizer settings, an environment, and the sweep
/// lists. Defaults reproduce the queueing benchmark settings.
struct ExperimentPlan {
  Algorithm algorithm = Algorithm::nqsf2;
  double q = 1.0;
  double beta = 0.1;
  double gamma = 0.65;  ///< exponent of the Hessian step schedule
  double a_exponent = 1.0;
  double b_exponent = 0.85;
  double epsilon = 0.1;
  PdVariant pd_variant = PdVariant::jacobi;
  long outer_iterations = 5000;
  long inner_iterations = 100;
  double initial_value = 0.6;  ///< every component of theta(0)

  EnvironmentConfig environment;

  std::vector<Algorithm> sweep_algorithms;  ///< empty -> {algorithm}
  std::vector<double> sweep_q;              ///< empty -> {q}
  std::vector<double> sweep_beta;           ///< empty -> {beta}
  std::vector<double> sweep_gamma;          ///< empty -> {gamma}

  int replications = 20;
  std::uint64_t seed_base = 1;
  int workers = 1;
  std::string output;

  struct Point {
    Algorithm algorithm;
    double q;
    double beta;
    double gamma;
  };

  /// Cartesian product of the sweep lists, algorithm-major.
  std::vector<Point> points() const;
  Eigen::VectorXd initial_theta() const;
  OptimizerConfig make_config(const Point& point, std::uint64_t seed) const;

  /// Throws ConfigError; checks every sweep point before anything runs.
  void validate() const;
};

ExperimentPlan plan_from_json_text(const std::string& text);
ExperimentPlan load_plan(const std::string& path);

struct ResultRow {
  enum class Kind { replication, aggregate };
  Kind kind;
  Algorithm algorithm;
  double q;
  double beta;
  double gamma;
  std::uint64_t seed = 0;      ///< replication rows only
  double final_distance = 0;   ///< per run, or the mean for aggregates
  double sd = 0;               ///< sample standard deviation, aggregates only
  int count = 1;
  double wall_time_s = 0;
};

/// Runs every sweep point for seeds seed_base + r, r < replications, on up to
/// plan.workers threads. Returns replication rows followed by one aggregate
/// per point, sorted by key; the output does not depend on the worker count.
std::vector<ResultRow> run_sweep(const ExperimentPlan& plan);

/// Fixed header:
/// kind,algorithm,q,beta,gamma,seed,final_distance,sd,count[,wall_time_s]
void write_sweep_csv(std::ostream& out, const std::vector<ResultRow>& rows, bool include_timing = false);

/// Mean and sample standard deviation, in the exact arithmetic used for
/// aggregate rows.
std::pair<double, double> mean_and_sd(const std::vector<double>& values);

/// Runs the plan's base point with `seed` and writes
/// n,distance,z_norm,w_norm for every outer iteration including n = 0.
Trajectory export_trajectory(const ExperimentPlan& plan, std::uint64_t seed, std::ostream& out);

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

/// %.17g; round-trips doubles exactly.
std::string format_exact(double x);

}  // namespace qsf

#endif  // QSF_EXPERIMENT_HPP
