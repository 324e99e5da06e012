#include "qsf/markov_env.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace qsf {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void QueueNetworkConfig::validate() const {
  if (!(lambda1 > 0.0) || !(lambda2 > 0.0)) throw std::invalid_argument("queue: arrival rates must be positive");
  if (!(feedback_p > 0.0 && feedback_p < 1.0)) throw std::invalid_argument("queue: feedback_p must lie in (0,1)");
  if (!(r1 > 0.0) || !(r2 > 0.0)) throw std::invalid_argument("queue: R1, R2 must be positive");
  if (n1 < 1 || n2 < 1) throw std::invalid_argument("queue: N1, N2 must be >= 1");
  if (theta_bar.size() != dim()) throw std::invalid_argument("queue: theta_bar must have length N1 + N2");
  if (!(box_lower < box_upper)) throw std::invalid_argument("queue: box lower must be below upper");
}

double service_time(const Eigen::Ref<const Eigen::VectorXd>& theta_node,
                    const Eigen::Ref<const Eigen::VectorXd>& theta_bar_node, double r, double u) {
  return u * (1.0 + (theta_node - theta_bar_node).squaredNorm()) / r;
}

QueueNetworkState QueueNetworkState::start(const QueueNetworkConfig& config, std::uint64_t seed) {
  QueueNetworkState s;
  s.arrivals.seed(derive_seed(seed, 0));
  s.services.seed(derive_seed(seed, 1));
  s.routing.seed(derive_seed(seed, 2));
  s.next_arrival[0] = std::exponential_distribution<double>(config.lambda1)(s.arrivals);
  s.next_arrival[1] = std::exponential_distribution<double>(config.lambda2)(s.arrivals);
  return s;
}

double total_waiting_time(const QueueNetworkState& state) {
  double total = 0.0;
  for (const auto& q : state.queues)
    for (double entry : q) total += state.clock - entry;
  return total;
}

namespace {

double draw_uniform_open(Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u;
  do {
    u = unif(rng);
  } while (u == 0.0);
  return u;
}

void begin_service(QueueNetworkState& s, const QueueNetworkConfig& c, const Eigen::VectorXd& params,
                   int node) {
  const double u = draw_uniform_open(s.services);
  const double length =
      node == 0 ? service_time(params.head(c.n1), c.theta_bar.head(c.n1), c.r1, u)
                : service_time(params.tail(c.n2), c.theta_bar.tail(c.n2), c.r2, u);
  s.completion[node] = s.clock + length;
}

void join(QueueNetworkState& s, const QueueNetworkConfig& c, const Eigen::VectorXd& params, int node,
          double entry_time) {
  s.queues[node].push_back(entry_time);
  if (s.queues[node].size() == 1) begin_service(s, c, params, node);
}

void depart(QueueNetworkState& s, const QueueNetworkConfig& c, const Eigen::VectorXd& params, int node) {
  const double entry = s.queues[node].front();
  s.queues[node].pop_front();
  s.completion[node] = QueueNetworkState::kIdle;
  if (!s.queues[node].empty()) begin_service(s, c, params, node);

  if (node == 0) {
    join(s, c, params, 1, entry);
  } else if (std::uniform_real_distribution<double>(0.0, 1.0)(s.routing) >= c.feedback_p) {
    join(s, c, params, 0, entry);
  }
}

}  // namespace

double advance_and_observe(QueueNetworkState& s, const QueueNetworkConfig& c, const Eigen::VectorXd& params) {
  if (params.size() != c.dim()) throw std::invalid_argument("queue: parameter length mismatch");

  // Earliest of the four event clocks; ties resolve in this fixed order.
  const std::array<double, 4> times{s.next_arrival[0], s.next_arrival[1], s.completion[0], s.completion[1]};
  int which = 0;
  for (int i = 1; i < 4; ++i)
    if (times[i] < times[which]) which = i;
  s.clock = times[which];

  switch (which) {
    case 0:
      join(s, c, params, 0, s.clock);
      s.next_arrival[0] = s.clock + std::exponential_distribution<double>(c.lambda1)(s.arrivals);
      break;
    case 1:
      join(s, c, params, 1, s.clock);
      s.next_arrival[1] = s.clock + std::exponential_distribution<double>(c.lambda2)(s.arrivals);
      break;
    default:
      depart(s, c, params, which - 2);
      break;
  }
  return total_waiting_time(s);
}

namespace {

class QueueReplica final : public Replica {
 public:
  QueueReplica(const QueueNetworkConfig& config, std::uint64_t seed)
      : config_(config), state_(QueueNetworkState::start(config, seed)) {}

  double observe_cost(const Eigen::VectorXd& params) override {
    return advance_and_observe(state_, config_, params);
  }

 private:
  QueueNetworkConfig config_;
  QueueNetworkState state_;
};

class AnalyticReplica final : public Replica {
 public:
  AnalyticReplica(const AnalyticSystem& sys, std::uint64_t seed) : sys_(sys), rng_(seed) {}
  double observe_cost(const Eigen::VectorXd& params) override { return analytic_observe(sys_, params, rng_); }

 private:
  AnalyticSystem sys_;
  Rng rng_;
};

}  // namespace

QueueNetwork::QueueNetwork(QueueNetworkConfig config) : config_(std::move(config)) { config_.validate(); }

std::unique_ptr<Replica> QueueNetwork::create_replica(std::uint64_t seed) const {
  return std::make_unique<QueueReplica>(config_, seed);
}

AnalyticSystem::AnalyticSystem(int dim, Objective obj, double noise)
    : dimension(dim), objective(std::move(obj)), noise_sd(noise) {
  if (dim < 1) throw std::invalid_argument("analytic system: dimension must be >= 1");
  if (!(noise_sd >= 0.0)) throw std::invalid_argument("analytic system: noise_sd must be >= 0");
}

std::unique_ptr<Replica> AnalyticSystem::create_replica(std::uint64_t seed) const {
  return std::make_unique<AnalyticReplica>(*this, seed);
}

double analytic_observe(const AnalyticSystem& sys, const Eigen::VectorXd& params, Rng& rng) {
  const double value = sys.objective(params);
  if (sys.noise_sd == 0.0) return value;
  return value + sys.noise_sd * std::normal_distribution<double>()(rng);
}

AnalyticSystem::Objective quadratic_objective(Eigen::MatrixXd a, Eigen::VectorXd center) {
  return [a = std::move(a), center = std::move(center)](const Eigen::VectorXd& theta) {
    const Eigen::VectorXd d = theta - center;
    return d.dot(a * d);
  };
}

}  // namespace qsf
