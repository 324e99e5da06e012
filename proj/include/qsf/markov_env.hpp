#ifndef QSF_MARKOV_ENV_HPP
#define QSF_MARKOV_ENV_HPP

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <memory>
#include <random>

#include <Eigen/Core>

#include "qsf/projections.hpp"

namespace qsf {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer over (base, stream); used to carve independent
/// substreams out of one user-facing seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// One independent realization of a parameterized Markov process.
class Replica {
 public:
  virtual ~Replica() = default;
  /// Advances one observation epoch under `params` and returns h(Y) >= 0.
  virtual double observe_cost(const Eigen::VectorXd& params) = 0;
};

/// Factory for independent replicas of one system.
class SimSystem {
 public:
  virtual ~SimSystem() = default;
  virtual int dim() const = 0;
  virtual std::unique_ptr<Replica> create_replica(std::uint64_t seed) const = 0;
};

// ---------------------------------------------------------------------------
// Two-node M/G/1 network with feedback.
//
// External Poisson arrivals feed both nodes. Node 1 departures join node 2.
// Node 2 departures leave with probability feedback_p, otherwise rejoin
// node 1. Service at node i is U (1 + |theta_i - theta_bar_i|^2) / R_i.

struct QueueNetworkConfig {
  double lambda1 = 0.2;
  double lambda2 = 0.1;
  double feedback_p = 0.4;  ///< probability of leaving after node 2
  double r1 = 10.0;
  double r2 = 20.0;
  int n1 = 10;
  int n2 = 10;
  Eigen::VectorXd theta_bar = Eigen::VectorXd::Constant(20, 0.3);
  double box_lower = 0.1;
  double box_upper = 0.6;

  int dim() const { return n1 + n2; }
  BoxConstraint<double> box() const { return BoxConstraint<double>::uniform(dim(), box_lower, box_upper); }
  /// Throws std::invalid_argument on an inconsistent configuration.
  void validate() const;
};

double service_time(const Eigen::Ref<const Eigen::VectorXd>& theta_node,
                    const Eigen::Ref<const Eigen::VectorXd>& theta_bar_node, double r, double u);

struct QueueNetworkState {
  static constexpr double kIdle = std::numeric_limits<double>::infinity();

  double clock = 0.0;
  /// Network-entry time of each customer, FIFO; the front is in service.
  std::array<std::deque<double>, 2> queues;
  std::array<double, 2> completion{kIdle, kIdle};
  std::array<double, 2> next_arrival{kIdle, kIdle};
  Rng arrivals;
  Rng services;
  Rng routing;

  /// Fresh empty network with the first external arrivals scheduled.
  static QueueNetworkState start(const QueueNetworkConfig& config, std::uint64_t seed);
};

/// Sum over customers present of (clock - network-entry time).
double total_waiting_time(const QueueNetworkState& state);

/// Processes exactly one event and returns the waiting-time cost right after it.
/// New services draw their length from the current `params`.
double advance_and_observe(QueueNetworkState& state, const QueueNetworkConfig& config,
                           const Eigen::VectorXd& params);

class QueueNetwork final : public SimSystem {
 public:
  explicit QueueNetwork(QueueNetworkConfig config);
  int dim() const override { return config_.dim(); }
  const QueueNetworkConfig& config() const { return config_; }
  std::unique_ptr<Replica> create_replica(std::uint64_t seed) const override;

 private:
  QueueNetworkConfig config_;
};

// ---------------------------------------------------------------------------
// Analytic objective with optional additive Gaussian noise.

struct AnalyticSystem final : SimSystem {
  using Objective = std::function<double(const Eigen::VectorXd&)>;

  AnalyticSystem(int dim, Objective objective, double noise_sd = 0.0);

  int dimension;
  Objective objective;
  double noise_sd;

  int dim() const override { return dimension; }
  std::unique_ptr<Replica> create_replica(std::uint64_t seed) const override;
};

double analytic_observe(const AnalyticSystem& sys, const Eigen::VectorXd& params, Rng& rng);

/// J(theta) = (theta - center)^T A (theta - center).
AnalyticSystem::Objective quadratic_objective(Eigen::MatrixXd a, Eigen::VectorXd center);

}  // namespace qsf

#endif  // QSF_MARKOV_ENV_HPP
