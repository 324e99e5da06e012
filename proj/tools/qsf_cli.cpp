// qsf: batch front-end for q-Gaussian smoothed-functional optimization.
//
//   qsf run-sweep         --config plan.json [--output results.csv] [--workers K] [--seed S] [--timing]
//   qsf export-trajectory --config plan.json --output traj.csv [--seed S]
//   qsf verify            <moments|estimators|projections|queue> [--samples N] [--seed S]
//
// Exit codes: 0 success, 1 verification or run failure, 2 invalid config.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "qsf/experiment.hpp"
#include "qsf/verify.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kBadConfig = 2;

qsf::ExperimentPlan plan_or_default(const std::string& path) {
  if (path.empty()) {
    qsf::ExperimentPlan plan;
    plan.validate();
    return plan;
  }
  return qsf::load_plan(path);
}

int run_sweep_cmd(const std::string& config, std::string output, std::optional<int> workers,
                  std::optional<std::uint64_t> seed, bool timing) {
  auto plan = plan_or_default(config);
  if (workers) plan.workers = *workers;
  if (seed) plan.seed_base = *seed;
  if (!output.empty()) plan.output = output;
  plan.validate();

  const auto rows = qsf::run_sweep(plan);
  if (plan.output.empty() || plan.output == "-") {
    qsf::write_sweep_csv(std::cout, rows, timing);
  } else {
    std::ofstream out(plan.output);
    if (!out) throw std::runtime_error("cannot open output '" + plan.output + "'");
    qsf::write_sweep_csv(out, rows, timing);
    if (!out) throw std::runtime_error("failed writing '" + plan.output + "'");
  }
  for (const auto& r : rows) {
    if (r.kind != qsf::ResultRow::Kind::aggregate) continue;
    std::cerr << qsf::to_string(r.algorithm) << " q=" << r.q << " beta=" << r.beta << " gamma=" << r.gamma
              << " : " << r.final_distance << " +/- " << r.sd << "  (" << r.wall_time_s << " s total)\n";
  }
  return kOk;
}

int export_cmd(const std::string& config, const std::string& output, std::optional<std::uint64_t> seed) {
  const auto plan = plan_or_default(config);
  const std::uint64_t s = seed.value_or(plan.seed_base);
  if (output.empty() || output == "-") {
    qsf::export_trajectory(plan, s, std::cout);
    return kOk;
  }
  std::ofstream out(output);
  if (!out) throw std::runtime_error("cannot open output '" + output + "'");
  qsf::export_trajectory(plan, s, out);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"q-Gaussian smoothed functional optimization (NqSF2 / GqSF2)"};
  app.require_subcommand(1);

  std::string config, output;
  std::optional<int> workers;
  std::optional<std::uint64_t> seed;
  bool timing = false;

  auto* sweep = app.add_subcommand("run-sweep", "Run replicated sweeps and write result rows as CSV");
  sweep->add_option("-c,--config", config, "Experiment config (JSON); defaults to the queueing benchmark");
  sweep->add_option("-o,--output", output, "Output CSV path ('-' for stdout)");
  sweep->add_option("-j,--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
  sweep->add_option("-s,--seed", seed, "Override seed_base");
  sweep->add_flag("--timing", timing, "Append a wall_time_s column");

  auto* traj = app.add_subcommand("export-trajectory", "Write per-iteration distance and estimator norms");
  traj->add_option("-c,--config", config, "Experiment config (JSON)");
  traj->add_option("-o,--output", output, "Output CSV path ('-' for stdout)");
  traj->add_option("-s,--seed", seed, "Run seed (defaults to seed_base)");

  std::string suite;
  qsf::VerifyOptions vopt;
  auto* ver = app.add_subcommand("verify", "Run a statistical/deterministic property suite");
  ver->add_option("suite", suite, "moments | estimators | projections | queue")
      ->required()
      ->check(CLI::IsMember({"moments", "estimators", "projections", "queue"}));
  ver->add_option("-n,--samples", vopt.samples, "Monte-Carlo sample count")->check(CLI::PositiveNumber);
  ver->add_option("-s,--seed", vopt.seed, "Random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kBadConfig;
  }

  try {
    if (*sweep) return run_sweep_cmd(config, output, workers, seed, timing);
    if (*traj) return export_cmd(config, output, seed);
    const auto report = qsf::verify(qsf::suite_from_string(suite), vopt);
    qsf::print_report(std::cout, report);
    return report.passed() ? kOk : kFailure;
  } catch (const qsf::ConfigError& e) {
    std::cerr << "invalid config: " << e.what() << '\n';
    return kBadConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
}
