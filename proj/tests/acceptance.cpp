// Acceptance suite. Prints detail lines while running, then one PASS/FAIL
// line per criterion. Exit status is 0 iff every criterion passes.

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "qsf/experiment.hpp"
#include "qsf/markov_env.hpp"
#include "qsf/qgaussian.hpp"
#include "qsf/sf_estimators.hpp"
#include "qsf/two_timescale.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;
using qsf::QGaussianSpec;

namespace {

constexpr double kSigmas = 5.0;
constexpr long kSamples = 1'000'000;

struct Outcome {
  bool passed;
  std::string summary;
};

void detail(const char* fmt, ...) __attribute__((format(printf, 1, 2)));
void detail(const char* fmt, ...) {
  std::va_list args;
  va_start(args, fmt);
  std::printf("    ");
  std::vprintf(fmt, args);
  std::printf("\n");
  va_end(args);
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Running {
  double sum = 0, sumsq = 0;
  long n = 0;
  void add(double x) {
    sum += x;
    sumsq += x * x;
    ++n;
  }
  double mean() const { return sum / n; }
  double se() const {
    const double m = mean();
    return std::sqrt(std::max(0.0, sumsq / n - m * m) / n);
  }
};

bool within(const char* label, const Running& r, double target) {
  const double err = std::abs(r.mean() - target);
  const bool ok = err <= kSigmas * r.se();
  detail("%-34s estimate %.6f  target %.6f  |err|/SE %.2f  %s", label, r.mean(), target, err / r.se(),
         ok ? "ok" : "MISS");
  return ok;
}

MatrixXd random_symmetric(std::uint64_t seed, int n) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = d(rng);
  return (m + m.transpose()) / 2;
}

// ---------------------------------------------------------------------------

Outcome moment_identities() {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  const std::pair<int, double> grid[] = {{1, 0.5}, {3, 0.5}, {5, 1.2}, {20, 1.05}};
  std::uint64_t seed = 101;
  for (const auto& [n, q] : grid) {
    const QGaussianSpec<double> spec(n, q);
    const double c = spec.scale();
    qsf::Rng rng(seed++);
    Running inv_rho, eta_sq_rho, eta4_rho_sq, cross_rho_sq, eta_sq_rho_sq;
    for (long i = 0; i < kSamples; ++i) {
      const auto p = qsf::sample(spec, rng);
      const double e0 = p.eta[0] * p.eta[0];
      const double r2 = p.rho * p.rho;
      inv_rho.add(1.0 / p.rho);
      eta_sq_rho.add(e0 / p.rho);
      eta4_rho_sq.add(e0 * e0 / r2);
      eta_sq_rho_sq.add(e0 / r2);
      if (n >= 2) cross_rho_sq.add(e0 * p.eta[1] * p.eta[1] / r2);
    }
    detail("N=%d q=%g", n, q);
    ok &= within("E[1/rho]", inv_rho, c / 2);
    ok &= within("E[eta_i^2/rho]", eta_sq_rho, c / 2);
    ok &= within("E[eta_i^4/rho^2]", eta4_rho_sq, 3 * c * c / (4 * q));
    ok &= within("E[eta_i^2/rho^2]", eta_sq_rho_sq, c * c / (4 * q));
    if (n >= 2) ok &= within("E[eta_i^2 eta_j^2/rho^2]", cross_rho_sq, c * c / (4 * q));
  }
  // Independent check of the squared numerator at N=1, q=0.5.
  boost::math::quadrature::tanh_sinh<double> integrator;
  const double edge = std::sqrt(5.0);
  const double num = integrator.integrate([](double x) { return x * x; }, -edge, edge);
  const double den = integrator.integrate([](double x) { return std::pow(1.0 - 0.2 * x * x, 2); }, -edge, edge);
  const double target = *qsf::moment_identity_targets(QGaussianSpec<double>(1, 0.5)).eta_sq_rho_sq;
  const bool quad_ok = std::abs(num / den - 3.125) < 1e-10 && std::abs(target - 3.125) < 1e-12;
  detail("quadrature E[eta^2/rho^2] at N=1 q=0.5: %.12f (library target %.12f)", num / den, target);
  ok &= quad_ok;
  const double secs = seconds_since(t0);
  ok &= secs < 60.0;
  return {ok, fmt("4 (N,q) points, 5 SE, quadrature 3.125; %.1f s (limit 60 s)", secs)};
}

Outcome estimator_unbiasedness() {
  const auto t0 = std::chrono::steady_clock::now();
  const MatrixXd a = random_symmetric(202, 3);
  const VectorXd center = (VectorXd(3) << 0.3, -0.2, 0.1).finished();
  const VectorXd theta = (VectorXd(3) << 0.5, 0.1, -0.4).finished();
  const auto objective = qsf::quadratic_objective(a, center);
  const VectorXd grad = 2.0 * a * (theta - center);
  const MatrixXd hess = 2.0 * a;
  bool ok = true;
  std::uint64_t seed = 203;
  for (double q : {0.5, 1.0, 1.05}) {
    const QGaussianSpec<double> spec(3, q, 0.1);
    qsf::Rng rng(seed++);
    const auto est = qsf::batch_estimate(objective, spec, theta, kSamples, rng);
    double worst_g = 0, worst_h = 0;
    for (int i = 0; i < 3; ++i) {
      worst_g = std::max(worst_g, std::abs(est.gradient[i] - grad[i]) / est.gradient_se[i]);
      for (int j = 0; j < 3; ++j)
        worst_h = std::max(worst_h, std::abs(est.hessian(i, j) - hess(i, j)) / est.hessian_se(i, j));
    }
    const bool this_ok = worst_g <= kSigmas && worst_h <= kSigmas;
    detail("q=%-5g max |grad err|/SE %.2f   max |hess err|/SE %.2f  %s", q, worst_g, worst_h,
           this_ok ? "ok" : "MISS");
    ok &= this_ok;
  }
  const double secs = seconds_since(t0);
  ok &= secs < 120.0;
  return {ok, fmt("N=3, q in {0.5,1,1.05}, beta=0.1, L=1e6, entrywise 5 SE; %.1f s (limit 120 s)", secs)};
}

Outcome hessian_weight_identities() {
  const MatrixXd a = random_symmetric(301, 3);
  bool ok = true;
  std::uint64_t seed = 302;
  for (double q : {0.5, 1.05}) {
    const QGaussianSpec<double> spec(3, q);
    qsf::Rng rng(seed++);
    MatrixXd m1 = MatrixXd::Zero(3, 3), s1 = MatrixXd::Zero(3, 3);
    MatrixXd m2 = MatrixXd::Zero(3, 3), s2 = MatrixXd::Zero(3, 3);
    for (long i = 0; i < kSamples; ++i) {
      const auto p = qsf::sample(spec, rng);
      const MatrixXd h = qsf::h_matrix(spec, p);
      const MatrixXd hq = h * p.eta.dot(a * p.eta);
      m1 += h;
      s1 += h.cwiseProduct(h);
      m2 += hq;
      s2 += hq.cwiseProduct(hq);
    }
    auto worst = [&](const MatrixXd& sum, const MatrixXd& sumsq, const MatrixXd& target) {
      const MatrixXd mean = sum / kSamples;
      const MatrixXd se = ((sumsq / kSamples - mean.cwiseProduct(mean)) / kSamples).cwiseSqrt();
      double w = 0;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) w = std::max(w, std::abs(mean(i, j) - target(i, j)) / se(i, j));
      return w;
    };
    const double w1 = worst(m1, s1, MatrixXd::Zero(3, 3));
    const double w2 = worst(m2, s2, spec.scale() * a);
    const bool this_ok = w1 <= kSigmas && w2 <= kSigmas;
    detail("q=%-5g E[H]=0: max |err|/SE %.2f   E[H eta'A eta]=cA: max |err|/SE %.2f  %s", q, w1, w2,
           this_ok ? "ok" : "MISS");
    ok &= this_ok;
  }
  return {ok, "N=3, q in {0.5,1.05}, 1e6 samples, entrywise 5 SE"};
}

Outcome normalization() {
  bool ok = true;
  const double gauss = std::sqrt(2.0 * std::numbers::pi);
  for (double q : {1.0 - 1e-4, 1.0 + 1e-4}) {
    const double k = qsf::normalizing_constant(QGaussianSpec<double>(1, q));
    const double rel = std::abs(k - gauss) / gauss;
    detail("K(q=%.4f, N=1) = %.9f  rel. diff %.2e (limit 1e-3)", q, k, rel);
    ok &= rel < 1e-3;
  }
  for (int n : {1, 2}) {
    for (double q : {0.25, 0.5, 1.0, 1.5}) {
      const QGaussianSpec<double> spec(n, q);
      auto radial = [&](double r) {
        VectorXd x = VectorXd::Zero(n);
        x[0] = r;
        const double g = qsf::density(spec, x);
        return n == 1 ? 2.0 * g : 2.0 * std::numbers::pi * r * g;
      };
      double mass;
      if (q < 1.0) {
        boost::math::quadrature::tanh_sinh<double> integrator;
        mass = integrator.integrate(radial, 0.0, std::sqrt(spec.support_radius_sq()));
      } else {
        boost::math::quadrature::exp_sinh<double> integrator;
        mass = integrator.integrate(radial, 0.0, std::numeric_limits<double>::infinity());
      }
      detail("N=%d q=%-4g  integral of density = %.12f", n, q, mass);
      ok &= std::abs(mass - 1.0) < 1e-6;
    }
  }
  return {ok, "K continuity at q=1+/-1e-4 within 1e-3; density mass within 1e-6 for N in {1,2}"};
}

// Every trajectory produced for criteria 5 to 7 is screened here.
struct RunAudit {
  long runs = 0;
  long violations = 0;
  double z_sup = 0;
  double w_sup = 0;
  double max_wall = 0;
  std::vector<std::string> over_cap;  ///< cells whose sup-norm exceeds 1e6

  void add(const qsf::Trajectory& t, const qsf::BoxConstraint<double>& box, double wall) {
    ++runs;
    max_wall = std::max(max_wall, wall);
    for (const auto& p : t.points) {
      if (!box.contains(p.theta) || !p.theta.allFinite() || !std::isfinite(p.z_norm) || !std::isfinite(p.w_norm))
        ++violations;
    }
    z_sup = std::max(z_sup, t.z_sup_norm());
    w_sup = std::max(w_sup, t.w_sup_norm());
  }
};

RunAudit audit;

Outcome quadratic_convergence() {
  const auto t0 = std::chrono::steady_clock::now();
  const VectorXd target = VectorXd::Constant(2, 0.3);
  const qsf::AnalyticSystem sys(2, qsf::quadratic_objective(MatrixXd::Identity(2, 2), target));
  qsf::OptimizerConfig c;
  c.algorithm = qsf::Algorithm::nqsf2;
  c.spec = QGaussianSpec<double>(2, 1.0, 0.05);
  c.box = qsf::BoxConstraint<double>::uniform(2, -1.0, 1.0);
  c.pd_policy = qsf::PdProjectionPolicy<double>(qsf::PdVariant::jacobi, 0.1);
  c.outer_iterations = 500;
  c.inner_iterations = 50;
  int hits = 0;
  double worst = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    c.seed = seed;
    const auto r0 = std::chrono::steady_clock::now();
    const auto traj = qsf::run(c, sys, VectorXd::Constant(2, 0.9), target);
    audit.add(traj, c.box, seconds_since(r0));
    const double d = *traj.points.back().distance;
    worst = std::max(worst, d);
    hits += d < 0.05;
  }
  const double secs = seconds_since(t0);
  detail("final distances: worst %.5f over 10 seeds", worst);
  return {hits == 10 && secs < 30.0, fmt("%g/10 seeds below 0.05 (worst %.4f); %.1f s (limit 30 s)", hits, worst, secs)};
}

struct Cell {
  double mean;
  double sd;
};

// Replicates the sweep through the library run loop so every trajectory can
// be audited; aggregates use the same arithmetic as run-sweep.
Cell run_cell(const qsf::ExperimentPlan& plan, qsf::Algorithm alg, double q, double beta) {
  const auto system = plan.environment.make_system();
  const VectorXd theta0 = plan.initial_theta();
  const VectorXd target = plan.environment.target();
  std::vector<double> finals;
  double w_sup = 0, z_sup = 0;
  for (int r = 0; r < plan.replications; ++r) {
    const auto cfg = plan.make_config({alg, q, beta, plan.gamma}, plan.seed_base + r);
    const auto r0 = std::chrono::steady_clock::now();
    const auto traj = qsf::run(cfg, *system, theta0, target);
    audit.add(traj, cfg.box, seconds_since(r0));
    finals.push_back(*traj.points.back().distance);
    w_sup = std::max(w_sup, traj.w_sup_norm());
    z_sup = std::max(z_sup, traj.z_sup_norm());
  }
  const auto [m, s] = qsf::mean_and_sd(finals);
  detail("%s q=%-5g beta=%-5g  %.4f +/- %.4f   sup|Z| %.3g  sup|W| %.3g", qsf::to_string(alg).c_str(), q, beta, m,
         s, z_sup, w_sup);
  if (std::max(w_sup, z_sup) >= 1e6) {
    char label[80];
    std::snprintf(label, sizeof label, "%s q=%g beta=%g", qsf::to_string(alg).c_str(), q, beta);
    audit.over_cap.emplace_back(label);
  }
  return {m, s};
}

Outcome queue_benchmark() {
  const auto t0 = std::chrono::steady_clock::now();
  const qsf::ExperimentPlan plan;  // benchmark defaults, seeds 1..20
  bool ordering = true;
  Cell gauss{};
  for (double q : {0.2, 0.6, 1.0, 1.05}) {
    const Cell n = run_cell(plan, qsf::Algorithm::nqsf2, q, 0.1);
    const Cell g = run_cell(plan, qsf::Algorithm::gqsf2, q, 0.1);
    ordering &= n.mean < g.mean;
    if (q == 1.0) gauss = n;
  }
  // The CLI sweep path must report the same aggregate.
  qsf::ExperimentPlan one = plan;
  one.workers = 2;
  const auto rows = qsf::run_sweep(one);
  const bool consistent = rows.back().kind == qsf::ResultRow::Kind::aggregate &&
                          rows.back().final_distance == gauss.mean && rows.back().sd == gauss.sd;
  detail("run-sweep aggregate %.17g matches: %s", rows.back().final_distance, consistent ? "yes" : "NO");
  const bool band = gauss.mean >= 0.20 && gauss.mean <= 0.55;
  const double secs = seconds_since(t0);
  char buf[200];
  std::snprintf(buf, sizeof buf, "NqSF2 q=1 mean %.4f (band [0.20, 0.55]); NqSF2 < GqSF2 at all 4 q: %s; %.0f s",
                gauss.mean, ordering ? "yes" : "no", secs);
  return {band && ordering && consistent, buf};
}

Outcome beta_trend() {
  const qsf::ExperimentPlan plan;
  const double qs[] = {0.2, 0.4, 0.6, 0.8, 1.0, 1.04};
  int wins_wide = 0;
  int significant_narrow = 0;
  for (double q : qs) {
    const Cell n25 = run_cell(plan, qsf::Algorithm::nqsf2, q, 0.25);
    const Cell g25 = run_cell(plan, qsf::Algorithm::gqsf2, q, 0.25);
    wins_wide += n25.mean < g25.mean;
    const Cell n01 = run_cell(plan, qsf::Algorithm::nqsf2, q, 0.01);
    const Cell g01 = run_cell(plan, qsf::Algorithm::gqsf2, q, 0.01);
    const double reps = plan.replications;
    const double se = std::sqrt(n01.sd * n01.sd / reps + g01.sd * g01.sd / reps);
    const double advantage = g01.mean - n01.mean;
    const bool sig = advantage > 2.0 * se;
    detail("q=%-5g beta=0.01 advantage (G - N) %.4f, 2 SE %.4f%s", q, advantage, 2.0 * se, sig ? "  significant" : "");
    significant_narrow += sig;
  }
  const bool ok = wins_wide >= 5 && significant_narrow == 0;
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "beta=0.25: NqSF2 better at %d/6 q (need >= 5); beta=0.01: significant NqSF2 advantage at %d/6 q "
                "(need 0)",
                wins_wide, significant_narrow);
  return {ok, buf};
}

Outcome boundedness() {
  const bool ok = audit.runs > 0 && audit.violations == 0 && audit.z_sup < 1e6 && audit.w_sup < 1e6 &&
                  audit.max_wall <= 60.0;
  for (const auto& cell : audit.over_cap) detail("sup-norm cap exceeded in cell %s", cell.c_str());
  char buf[260];
  std::snprintf(buf, sizeof buf,
                "%ld runs: %ld infeasible or non-finite iterates; sup|Z| %.3g, sup|W| %.3g (cap 1e6, exceeded in %zu "
                "cells); slowest run %.2f s (cap 60 s)",
                audit.runs, audit.violations, audit.z_sup, audit.w_sup, audit.over_cap.size(), audit.max_wall);
  return {ok, buf};
}

Outcome determinism() {
  const qsf::ExperimentPlan plan;
  std::ostringstream a, b;
  qsf::export_trajectory(plan, plan.seed_base, a);
  qsf::export_trajectory(plan, plan.seed_base, b);
  const std::string text = a.str();
  const bool same = text == b.str() && !text.empty();
  const auto rows = std::count(text.begin(), text.end(), '\n') - 1;
  return {same, fmt("NqSF2 q=1 seed 1 trajectory exported twice: %g rows, byte-identical", static_cast<double>(rows))};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria = {
      {"moment identities", moment_identities},
      {"estimator unbiasedness on quadratics", estimator_unbiasedness},
      {"Hessian weight identities", hessian_weight_identities},
      {"normalizing constant and density mass", normalization},
      {"noiseless quadratic optimization", quadratic_convergence},
      {"queueing benchmark band and ordering", queue_benchmark},
      {"smoothing-parameter trend", beta_trend},
      {"boundedness and feasibility", boundedness},
      {"determinism", determinism},
  };
  std::vector<std::pair<bool, std::string>> results;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    std::printf("criterion %zu: %s\n", i + 1, criteria[i].name);
    std::fflush(stdout);
    Outcome o;
    try {
      o = criteria[i].check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    results.emplace_back(o.passed, o.summary);
  }
  std::printf("\n");
  int failed = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    std::printf("%s  %zu. %s: %s\n", results[i].first ? "PASS" : "FAIL", i + 1, criteria[i].name,
                results[i].second.c_str());
    failed += !results[i].first;
  }
  std::printf("\n%zu/%zu criteria passed\n", results.size() - failed, results.size());
  return failed == 0 ? 0 : 1;
}
