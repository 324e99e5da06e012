#include "qsf/verify.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <Eigen/Eigenvalues>

#include "qsf/markov_env.hpp"
#include "qsf/projections.hpp"
#include "qsf/qgaussian.hpp"
#include "qsf/sf_estimators.hpp"

namespace qsf {

Suite suite_from_string(const std::string& name) {
  if (name == "moments") return Suite::moments;
  if (name == "estimators") return Suite::estimators;
  if (name == "projections") return Suite::projections;
  if (name == "queue") return Suite::queue;
  throw std::invalid_argument("unknown verify suite '" + name + "'");
}

bool VerifyReport::passed() const {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return true;
}

namespace {

/// Running mean / standard error of one scalar statistic.
struct Accumulator {
  long n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  double se() const { return n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0; }
};

Check statistical(std::string name, double target, const Accumulator& acc, double sigmas) {
  const double tol = sigmas * acc.se();
  return {std::move(name), target, acc.mean, acc.se(), tol, std::abs(acc.mean - target) <= tol};
}

Check exact(std::string name, double target, double estimate, double tol) {
  return {std::move(name), target, estimate, 0.0, tol, std::abs(estimate - target) <= tol};
}

std::string label(const char* what, int n, double q) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%s [N=%d q=%g]", what, n, q);
  return buf;
}

void moments_suite(const VerifyOptions& opt, std::vector<Check>& out) {
  Rng rng(opt.seed);
  for (int n : {1, 3, 5, 20}) {
    for (double q : {0.3, 0.6, 1.0, 1.05, 1.2}) {
      if (q >= QGaussianSpec<double>::upper_q_bound(n)) continue;
      const QGaussianSpec<double> spec(n, q);
      const auto t = moment_identity_targets(spec);
      Accumulator inv_rho, sq_rho, sq_rho2, quartic_rho2, cross_rho2, odd1, odd2;
      for (long s = 0; s < opt.samples; ++s) {
        const auto p = sample(spec, rng);
        const double r = p.rho;
        const auto e2 = p.eta.array().square();
        const double sum2 = e2.sum();
        const double sum4 = e2.square().sum();
        inv_rho.add(1.0 / r);
        sq_rho.add(sum2 / n / r);
        sq_rho2.add(sum2 / n / (r * r));
        quartic_rho2.add(sum4 / n / (r * r));
        if (n >= 2) {
          cross_rho2.add((sum2 * sum2 - sum4) / (n * (n - 1.0)) / (r * r));
          odd2.add(p.eta[0] * p.eta[1] / r);
        }
        odd1.add(p.eta[0] / r);
      }
      out.push_back(statistical(label("E[1/rho]", n, q), t.inv_rho, inv_rho, opt.sigmas));
      out.push_back(statistical(label("E[eta_i^2/rho]", n, q), t.inv_rho, sq_rho, opt.sigmas));
      out.push_back(statistical(label("E[eta_i^2/rho^2]", n, q), *t.eta_sq_rho_sq, sq_rho2, opt.sigmas));
      out.push_back(statistical(label("E[eta_i^4/rho^2]", n, q), *t.eta_quartic_rho_sq, quartic_rho2, opt.sigmas));
      out.push_back(statistical(label("E[eta_i/rho]", n, q), 0.0, odd1, opt.sigmas));
      if (n >= 2) {
        out.push_back(statistical(label("E[eta_i^2 eta_j^2/rho^2]", n, q), *t.eta_cross_rho_sq, cross_rho2, opt.sigmas));
        out.push_back(statistical(label("E[eta_i eta_j/rho]", n, q), 0.0, odd2, opt.sigmas));
      }
    }
  }

  // One-dimensional quadrature cross-check of E[eta^2/rho^2] at q = 0.5,
  // where the density is proportional to rho^2 on (-sqrt 5, sqrt 5).
  using boost::math::quadrature::gauss_kronrod;
  const double edge = std::sqrt(5.0);
  const double num = gauss_kronrod<double, 31>::integrate([](double x) { return x * x; }, -edge, edge);
  const double den = gauss_kronrod<double, 31>::integrate(
      [](double x) { const double r = 1.0 - 0.2 * x * x; return r * r; }, -edge, edge);
  const QGaussianSpec<double> one_d(1, 0.5);
  out.push_back(exact("quadrature E[eta^2/rho^2] [N=1 q=0.5]", *moment_identity_targets(one_d).eta_sq_rho_sq,
                      num / den, 1e-9));
}

void estimators_suite(const VerifyOptions& opt, std::vector<Check>& out) {
  Rng rng(opt.seed);
  const int n = 3;
  // Fixed symmetric A and offset so the report is reproducible.
  Eigen::MatrixXd a(n, n);
  a << 2.0, 0.5, -0.3, 0.5, 1.0, 0.2, -0.3, 0.2, 1.5;
  Eigen::VectorXd center(n), theta(n);
  center << 0.3, -0.2, 0.1;
  theta << 0.5, 0.1, -0.4;
  const auto objective = quadratic_objective(a, center);
  const Eigen::VectorXd grad = 2.0 * a * (theta - center);
  const Eigen::MatrixXd hess = 2.0 * a;

  for (double q : {0.5, 1.0, 1.05}) {
    const QGaussianSpec<double> spec(n, q, 0.1);
    const auto est = batch_estimate(objective, spec, theta, opt.samples, rng);
    for (int i = 0; i < n; ++i) {
      const double tol = opt.sigmas * est.gradient_se[i];
      out.push_back({label(("gradient[" + std::to_string(i) + "] vs 2A(theta-theta*)").c_str(), n, q), grad[i],
                     est.gradient[i], est.gradient_se[i], tol, std::abs(est.gradient[i] - grad[i]) <= tol});
    }
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        const double tol = opt.sigmas * est.hessian_se(i, j);
        out.push_back({label(("hessian[" + std::to_string(i) + "," + std::to_string(j) + "] vs 2A").c_str(), n, q),
                       hess(i, j), est.hessian(i, j), est.hessian_se(i, j), tol,
                       std::abs(est.hessian(i, j) - hess(i, j)) <= tol});
      }
  }

  for (double q : {0.5, 1.05}) {
    const QGaussianSpec<double> spec(n, q);
    std::vector<Accumulator> h_mean(n * n), quad(n * n), dir(n * n);
    for (long s = 0; s < opt.samples; ++s) {
      const auto p = sample(spec, rng);
      const Eigen::MatrixXd h = h_matrix(spec, p);
      const double form = p.eta.dot(a * p.eta);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          h_mean[i * n + j].add(h(i, j));
          quad[i * n + j].add(h(i, j) * form);
          dir[i * n + j].add(2.0 * p.eta[i] * p.eta[j] / (spec.scale() * p.rho));
        }
    }
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        const std::string ij = "[" + std::to_string(i) + "," + std::to_string(j) + "]";
        out.push_back(statistical(label(("E[H]" + ij).c_str(), n, q), 0.0, h_mean[i * n + j], opt.sigmas));
        out.push_back(statistical(label(("E[H eta^T A eta]" + ij + " vs (N+2-Nq)A").c_str(), n, q),
                                  spec.scale() * a(i, j), quad[i * n + j], opt.sigmas));
        out.push_back(statistical(label(("E[2 eta eta^T/((N+2-Nq) rho)]" + ij).c_str(), n, q), i == j ? 1.0 : 0.0,
                                  dir[i * n + j], opt.sigmas));
      }
  }
}

void projections_suite(const VerifyOptions& opt, std::vector<Check>& out) {
  Rng rng(opt.seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const long trials = std::min<long>(opt.samples, 10'000);
  for (PdVariant variant : {PdVariant::jacobi, PdVariant::full_spectral}) {
    const PdProjectionPolicy<double> policy(variant, 0.1);
    const char* name = variant == PdVariant::jacobi ? "jacobi" : "full_spectral";
    double worst_floor = std::numeric_limits<double>::infinity();
    double worst_idem = 0.0, worst_residual = 0.0, worst_lipschitz = 0.0;
    for (long t = 0; t < trials; ++t) {
      const int n = 1 + static_cast<int>(t % 6);
      Eigen::MatrixXd w(n, n);
      for (int i = 0; i < w.size(); ++i) w.data()[i] = 3.0 * unif(rng);
      const Eigen::MatrixXd p = project_pd(policy, w);
      worst_idem = std::max(worst_idem, (project_pd(policy, p) - p).cwiseAbs().maxCoeff());
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p);
      worst_floor = std::min(worst_floor, es.eigenvalues().minCoeff());
      Eigen::VectorXd z(n);
      for (int i = 0; i < n; ++i) z[i] = unif(rng);
      const Eigen::VectorXd d = newton_direction(policy, p, z);
      worst_residual = std::max(worst_residual, (p * d - z).norm() / std::max(z.norm(), 1e-300));
      Eigen::MatrixXd delta(n, n);
      for (int i = 0; i < delta.size(); ++i) delta.data()[i] = 1e-7 * unif(rng);
      const double moved = (project_pd(policy, Eigen::MatrixXd(w + delta)) - p).norm();
      worst_lipschitz = std::max(worst_lipschitz, moved / delta.norm());
    }
    out.push_back(exact(std::string("max |P(P(W)) - P(W)| ") + name, 0.0, worst_idem, 0.0));
    out.push_back({std::string("min eigenvalue of P(W) >= eps - 1e-12 ") + name, 0.1, worst_floor, 0.0, 1e-12,
                   worst_floor >= 0.1 - 1e-12});
    out.push_back({std::string("newton residual |Wd - z|/|z| <= 1e-8 ") + name, 0.0, worst_residual, 0.0, 1e-8,
                   worst_residual <= 1e-8});
    out.push_back({std::string("Lipschitz ratio |P(W+d)-P(W)|/|d| <= 10 ") + name, 0.0, worst_lipschitz, 0.0, 10.0,
                   worst_lipschitz <= 10.0});
  }
  const auto box = BoxConstraint<double>::uniform(4, 0.1, 0.6);
  double worst_box = 0.0;
  bool feasible = true;
  for (long t = 0; t < trials; ++t) {
    Eigen::VectorXd x(4);
    for (int i = 0; i < 4; ++i) x[i] = 2.0 * unif(rng);
    const Eigen::VectorXd p = project_box(box, x);
    feasible = feasible && box.contains(p);
    worst_box = std::max(worst_box, (project_box(box, p) - p).cwiseAbs().maxCoeff());
  }
  out.push_back(exact("max |P_C(P_C(x)) - P_C(x)|", 0.0, worst_box, 0.0));
  out.push_back({"P_C(x) lies in C", 1.0, feasible ? 1.0 : 0.0, 0.0, 0.0, feasible});
}

void queue_suite(const VerifyOptions& opt, std::vector<Check>& out) {
  const QueueNetworkConfig cfg;
  const long events = std::max<long>(opt.samples / 10, 100'000);

  // Poisson arrivals at node 1: mean inter-arrival time 1 / lambda1.
  {
    auto s = QueueNetworkState::start(cfg, opt.seed);
    Accumulator gaps;
    double last = 0.0;
    long arrivals = 0;
    const Eigen::VectorXd params = cfg.theta_bar;
    while (arrivals < events) {
      const double before = s.next_arrival[0];
      advance_and_observe(s, cfg, params);
      if (s.next_arrival[0] != before) {
        gaps.add(before - last);
        last = before;
        ++arrivals;
      }
    }
    out.push_back(statistical("node-1 mean inter-arrival time vs 1/lambda1", 1.0 / cfg.lambda1, gaps, opt.sigmas));
  }

  // Mean cost at theta_bar vs at theta(0) = 0.6, batch means over 100 batches.
  auto batch_cost = [&](const Eigen::VectorXd& params, std::uint64_t seed, long total, double* max_tail_len,
                        double* max_head_len) {
    auto s = QueueNetworkState::start(cfg, seed);
    const long batches = 100, per = total / batches;
    Accumulator acc;
    double head = 0.0, tail = 0.0;
    for (long b = 0; b < batches; ++b) {
      double sum = 0.0;
      double longest = 0.0;
      for (long e = 0; e < per; ++e) {
        sum += advance_and_observe(s, cfg, params);
        longest = std::max(longest, static_cast<double>(s.queues[0].size() + s.queues[1].size()));
      }
      if (b < batches / 2) head = std::max(head, longest);
      else tail = std::max(tail, longest);
      acc.add(sum / static_cast<double>(per));
    }
    if (max_tail_len) *max_tail_len = tail;
    if (max_head_len) *max_head_len = head;
    return acc;
  };
  double tail = 0.0, head = 0.0;
  const Accumulator at_target = batch_cost(cfg.theta_bar, opt.seed + 1, std::max(events, 1'000'000L), &tail, &head);
  const Accumulator at_start =
      batch_cost(Eigen::VectorXd::Constant(cfg.dim(), 0.6), opt.seed + 2, events, nullptr, nullptr);
  const double gap = at_start.mean - at_target.mean;
  const double gap_se = std::hypot(at_start.se(), at_target.se());
  out.push_back({"mean cost(theta(0)) - mean cost(theta_bar) > 5 SE", 0.0, gap, gap_se, opt.sigmas * gap_se,
                 gap > opt.sigmas * gap_se});
  // No monotone growth: the second half of the run is not more congested
  // than a generous multiple of the first half.
  out.push_back({"max customers in system, second half vs 2x first half + 5", 2.0 * head + 5.0, tail, 0.0, 0.0,
                 tail <= 2.0 * head + 5.0});
}

}  // namespace

VerifyReport verify(Suite suite, const VerifyOptions& options) {
  VerifyReport report{suite, {}};
  switch (suite) {
    case Suite::moments: moments_suite(options, report.checks); break;
    case Suite::estimators: estimators_suite(options, report.checks); break;
    case Suite::projections: projections_suite(options, report.checks); break;
    case Suite::queue: queue_suite(options, report.checks); break;
  }
  return report;
}

void print_report(std::ostream& out, const VerifyReport& report) {
  char line[512];
  for (const auto& c : report.checks) {
    std::snprintf(line, sizeof line, "%-4s %-62s target=% .6g estimate=% .6g se=%.3g tol=%.3g\n",
                  c.passed ? "PASS" : "FAIL", c.name.c_str(), c.target, c.estimate, c.standard_error, c.tolerance);
    out << line;
  }
  out << (report.passed() ? "all checks passed" : "verification FAILED") << " (" << report.checks.size()
      << " checks)\n";
}

}  // namespace qsf
