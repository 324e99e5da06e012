#include "qsf/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>
#include <tuple>

#include <json.hpp>

namespace qsf {

using nlohmann::json;

int EnvironmentConfig::dim() const { return kind == EnvironmentKind::queue ? queue.dim() : quadratic_dim; }

BoxConstraint<double> EnvironmentConfig::box() const {
  if (kind == EnvironmentKind::queue) return queue.box();
  return BoxConstraint<double>::uniform(quadratic_dim, quadratic_lower, quadratic_upper);
}

Eigen::VectorXd EnvironmentConfig::target() const {
  if (kind == EnvironmentKind::queue) return queue.theta_bar;
  return Eigen::VectorXd::Constant(quadratic_dim, quadratic_center);
}

std::unique_ptr<SimSystem> EnvironmentConfig::make_system() const {
  if (kind == EnvironmentKind::queue) return std::make_unique<QueueNetwork>(queue);
  return std::make_unique<AnalyticSystem>(
      quadratic_dim, quadratic_objective(Eigen::MatrixXd::Identity(quadratic_dim, quadratic_dim), target()),
      quadratic_noise_sd);
}

std::vector<ExperimentPlan::Point> ExperimentPlan::points() const {
  const auto algs = sweep_algorithms.empty() ? std::vector<Algorithm>{algorithm} : sweep_algorithms;
  const auto qs = sweep_q.empty() ? std::vector<double>{q} : sweep_q;
  const auto betas = sweep_beta.empty() ? std::vector<double>{beta} : sweep_beta;
  const auto gammas = sweep_gamma.empty() ? std::vector<double>{gamma} : sweep_gamma;
  std::vector<Point> out;
  for (Algorithm a : algs)
    for (double qv : qs)
      for (double b : betas)
        for (double g : gammas) out.push_back({a, qv, b, g});
  return out;
}

Eigen::VectorXd ExperimentPlan::initial_theta() const {
  return Eigen::VectorXd::Constant(environment.dim(), initial_value);
}

OptimizerConfig ExperimentPlan::make_config(const Point& point, std::uint64_t seed) const {
  const int dim = environment.dim();
  OptimizerConfig cfg;
  cfg.algorithm = point.algorithm;
  cfg.spec = QGaussianSpec<double>(dim, point.q, point.beta);
  cfg.box = environment.box();
  cfg.pd_policy = PdProjectionPolicy<double>(pd_variant, epsilon);
  cfg.a_schedule = StepSchedule(a_exponent);
  cfg.b_schedule = StepSchedule(b_exponent);
  cfg.c_schedule = StepSchedule(point.gamma);
  cfg.outer_iterations = outer_iterations;
  cfg.inner_iterations = inner_iterations;
  cfg.seed = seed;
  return cfg;
}

void ExperimentPlan::validate() const {
  try {
    if (environment.kind == EnvironmentKind::queue) environment.queue.validate();
    if (replications < 1) throw ConfigError("replications must be >= 1");
    if (workers < 1) throw ConfigError("workers must be >= 1");
    if (!environment.box().contains(initial_theta())) throw ConfigError("initial theta must lie inside the box");
    auto all = points();
    all.push_back({algorithm, q, beta, gamma});
    for (const auto& p : all) {
      const double upper = QGaussianSpec<double>::upper_q_bound(environment.dim());
      if (p.algorithm == Algorithm::nqsf2 && !(p.q > 0.0 && p.q < upper)) {
        std::ostringstream msg;
        msg << "q=" << p.q << " is outside (0, " << upper << ") required by nqsf2";
        throw ConfigError(msg.str());
      }
      make_config(p, seed_base).validate();
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

namespace {

template <typename T>
void read(const json& j, const char* key, T& into) {
  if (j.contains(key)) into = j.at(key).get<T>();
}

template <typename T>
std::vector<T> read_list(const json& j, const char* key) {
  std::vector<T> out;
  if (!j.contains(key)) return out;
  const auto& v = j.at(key);
  if (v.is_array())
    for (const auto& e : v) out.push_back(e.get<T>());
  else
    out.push_back(v.get<T>());
  return out;
}

PdVariant variant_from_string(const std::string& s) {
  if (s == "jacobi") return PdVariant::jacobi;
  if (s == "full_spectral") return PdVariant::full_spectral;
  throw ConfigError("unknown pd_variant '" + s + "' (expected jacobi or full_spectral)");
}

void parse_queue(const json& j, QueueNetworkConfig& c) {
  read(j, "lambda1", c.lambda1);
  read(j, "lambda2", c.lambda2);
  read(j, "feedback_p", c.feedback_p);
  read(j, "R1", c.r1);
  read(j, "R2", c.r2);
  read(j, "N1", c.n1);
  read(j, "N2", c.n2);
  if (j.contains("box")) {
    read(j.at("box"), "lower", c.box_lower);
    read(j.at("box"), "upper", c.box_upper);
  }
  const int dim = c.n1 + c.n2;
  if (dim < 2) throw ConfigError("queue: N1 + N2 must be >= 2");
  c.theta_bar = Eigen::VectorXd::Constant(dim, 0.3);
  if (j.contains("theta_bar")) {
    const auto& tb = j.at("theta_bar");
    if (tb.is_number()) {
      c.theta_bar.setConstant(tb.get<double>());
    } else {
      const auto v = tb.get<std::vector<double>>();
      if (static_cast<int>(v.size()) != dim) throw ConfigError("queue: theta_bar must have N1 + N2 entries");
      c.theta_bar = Eigen::Map<const Eigen::VectorXd>(v.data(), dim);
    }
  }
}

}  // namespace

ExperimentPlan plan_from_json_text(const std::string& text) {
  ExperimentPlan plan;
  try {
    const json root = json::parse(text);
    if (root.contains("optimizer")) {
      const auto& o = root.at("optimizer");
      if (o.contains("algorithm")) plan.algorithm = algorithm_from_string(o.at("algorithm").get<std::string>());
      read(o, "q", plan.q);
      read(o, "beta", plan.beta);
      read(o, "gamma", plan.gamma);
      read(o, "a_exponent", plan.a_exponent);
      read(o, "b_exponent", plan.b_exponent);
      read(o, "epsilon", plan.epsilon);
      if (o.contains("pd_variant")) plan.pd_variant = variant_from_string(o.at("pd_variant").get<std::string>());
      read(o, "outer_iterations", plan.outer_iterations);
      read(o, "inner_iterations", plan.inner_iterations);
      read(o, "initial_value", plan.initial_value);
    }
    if (root.contains("environment")) {
      const auto& e = root.at("environment");
      const std::string type = e.value("type", "queue");
      if (type == "queue") {
        plan.environment.kind = EnvironmentKind::queue;
        parse_queue(e, plan.environment.queue);
      } else if (type == "quadratic") {
        plan.environment.kind = EnvironmentKind::quadratic;
        read(e, "dim", plan.environment.quadratic_dim);
        read(e, "center", plan.environment.quadratic_center);
        read(e, "noise_sd", plan.environment.quadratic_noise_sd);
        if (e.contains("box")) {
          read(e.at("box"), "lower", plan.environment.quadratic_lower);
          read(e.at("box"), "upper", plan.environment.quadratic_upper);
        }
      } else {
        throw ConfigError("unknown environment type '" + type + "'");
      }
    }
    if (root.contains("sweep")) {
      const auto& s = root.at("sweep");
      for (const auto& name : read_list<std::string>(s, "algorithm"))
        plan.sweep_algorithms.push_back(algorithm_from_string(name));
      plan.sweep_q = read_list<double>(s, "q");
      plan.sweep_beta = read_list<double>(s, "beta");
      plan.sweep_gamma = read_list<double>(s, "gamma");
    }
    read(root, "replications", plan.replications);
    read(root, "seed_base", plan.seed_base);
    read(root, "workers", plan.workers);
    read(root, "output", plan.output);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  plan.validate();
  return plan;
}

ExperimentPlan load_plan(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return plan_from_json_text(buf.str());
}

std::pair<double, double> mean_and_sd(const std::vector<double>& values) {
  if (values.empty()) return {std::nan(""), std::nan("")};
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  if (values.size() < 2) return {mean, std::nan("")};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

std::vector<ResultRow> run_sweep(const ExperimentPlan& plan) {
  plan.validate();
  const auto points = plan.points();
  const auto reps = static_cast<std::size_t>(plan.replications);
  const std::size_t jobs = points.size() * reps;
  const auto system = plan.environment.make_system();
  const Eigen::VectorXd theta0 = plan.initial_theta();
  const Eigen::VectorXd target = plan.environment.target();

  std::vector<ResultRow> runs(jobs);
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::string first_error;

  auto worker = [&] {
    for (std::size_t job = next++; job < jobs; job = next++) {
      const auto& p = points[job / reps];
      const std::uint64_t seed = plan.seed_base + job % reps;
      try {
        const auto start = std::chrono::steady_clock::now();
        const Trajectory traj = run(plan.make_config(p, seed), *system, theta0, target);
        const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
        runs[job] = {ResultRow::Kind::replication, p.algorithm, p.q, p.beta, p.gamma, seed,
                     distance_to_target(traj.final_theta(), target), 0.0, 1, elapsed.count()};
      } catch (const std::exception& e) {
        std::lock_guard lock(error_mutex);
        if (first_error.empty()) first_error = e.what();
      }
    }
  };

  const int threads = std::max(1, std::min<int>(plan.workers, static_cast<int>(jobs)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (!first_error.empty()) throw std::runtime_error(first_error);

  auto key = [](const ResultRow& r) {
    return std::make_tuple(static_cast<int>(r.algorithm), r.q, r.beta, r.gamma, static_cast<int>(r.kind), r.seed);
  };
  std::vector<ResultRow> rows = runs;
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::vector<double> finals;
    double wall = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
      finals.push_back(runs[i * reps + r].final_distance);
      wall += runs[i * reps + r].wall_time_s;
    }
    const auto [mean, sd] = mean_and_sd(finals);
    const auto& p = points[i];
    rows.push_back({ResultRow::Kind::aggregate, p.algorithm, p.q, p.beta, p.gamma, 0, mean, sd,
                    static_cast<int>(reps), wall});
  }
  std::stable_sort(rows.begin(), rows.end(), [&](const ResultRow& a, const ResultRow& b) { return key(a) < key(b); });
  return rows;
}

std::string format_exact(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

std::string format_key(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

}  // namespace

void write_sweep_csv(std::ostream& out, const std::vector<ResultRow>& rows, bool include_timing) {
  out << "kind,algorithm,q,beta,gamma,seed,final_distance,sd,count";
  if (include_timing) out << ",wall_time_s";
  out << '\n';
  for (const auto& r : rows) {
    const bool agg = r.kind == ResultRow::Kind::aggregate;
    out << (agg ? "aggregate" : "replication") << ',' << to_string(r.algorithm) << ',' << format_key(r.q) << ','
        << format_key(r.beta) << ',' << format_key(r.gamma) << ',' << (agg ? "" : std::to_string(r.seed)) << ','
        << format_exact(r.final_distance) << ',' << (agg && std::isfinite(r.sd) ? format_exact(r.sd) : "") << ','
        << r.count;
    if (include_timing) out << ',' << format_key(r.wall_time_s);
    out << '\n';
  }
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
  out << "n,distance,z_norm,w_norm\n";
  for (const auto& p : trajectory.points) {
    out << p.n << ',' << (p.distance ? format_exact(*p.distance) : "") << ',' << format_exact(p.z_norm) << ','
        << format_exact(p.w_norm) << '\n';
  }
}

Trajectory export_trajectory(const ExperimentPlan& plan, std::uint64_t seed, std::ostream& out) {
  plan.validate();
  const auto system = plan.environment.make_system();
  const ExperimentPlan::Point base{plan.algorithm, plan.q, plan.beta, plan.gamma};
  Trajectory traj = run(plan.make_config(base, seed), *system, plan.initial_theta(), plan.environment.target());
  write_trajectory_csv(out, traj);
  if (!out) throw std::runtime_error("export_trajectory: write failed");
  return traj;
}

}  // namespace qsf
