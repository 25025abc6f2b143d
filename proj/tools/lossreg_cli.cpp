// lossreg: train / grid / report / selftest front end.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lossreg/cli.hpp"
#include "lossreg/config.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::vector<std::string> overrides;
  std::string out;
  std::string format = "csv";
  std::size_t runs = 0;
  long long seed = -1;
  unsigned threads = 1;
  int verbosity = 0;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("-c,--config", f.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("-s,--set", f.overrides, "override, e.g. regularizer.alpha_pct=10 (repeatable)");
  cmd->add_option("-o,--out", f.out, "report file to write");
  cmd->add_option("-f,--format", f.format, "report format")->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--runs", f.runs, "number of runs (overrides protocol.runs)");
  cmd->add_option("--seed", f.seed, "base seed (overrides protocol.seed)");
  cmd->add_option("-j,--threads", f.threads, "runs executed concurrently")->check(CLI::PositiveNumber);
  cmd->add_flag("-v,--verbose", f.verbosity, "per-run output");
}

lossreg::harness::ExperimentConfig load(const CommonFlags& f) {
  std::vector<lossreg::config::Override> overrides;
  for (const auto& o : f.overrides) overrides.push_back(lossreg::config::parse_override(o));
  if (f.runs > 0) overrides.emplace_back("protocol.runs", std::to_string(f.runs));
  if (f.seed >= 0) overrides.emplace_back("protocol.seed", std::to_string(f.seed));
  return lossreg::config::parse_config(f.config, overrides);
}

lossreg::cli::TrainOptions train_options(const CommonFlags& f) {
  lossreg::cli::TrainOptions o;
  o.out = f.out;
  o.format = lossreg::harness::parse_report_format(f.format);
  o.threads = f.threads;
  o.verbosity = f.verbosity;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Loss-layer regularization experiments (DisturbLabel family)"};
  app.require_subcommand(1);

  CommonFlags train_flags;
  auto* train = app.add_subcommand("train", "run an experiment and summarize it");
  add_common(train, train_flags);

  CommonFlags grid_flags;
  std::vector<std::string> axes;
  std::size_t grid_runs = 5;
  std::size_t final_runs = 0;
  std::size_t max_points = 256;
  auto* grid = app.add_subcommand("grid", "grid-search hyperparameters");
  add_common(grid, grid_flags);
  grid->add_option("-g,--grid", axes, "axis name=v1,v2,... (repeatable)")->required();
  grid->add_option("--grid-runs", grid_runs, "runs per grid point")->check(CLI::PositiveNumber);
  grid->add_option("--final-runs", final_runs, "rerun the best point with this many runs");
  grid->add_option("--max-points", max_points, "cap on the grid size");

  std::vector<std::string> inputs;
  std::string report_out;
  std::string report_format = "csv";
  auto* report = app.add_subcommand("report", "merge report files into one comparison table");
  report->add_option("inputs", inputs, "report files")->required()->check(CLI::ExistingFile);
  report->add_option("-o,--out", report_out, "merged report file");
  report->add_option("-f,--format", report_format, "merged report format")->check(CLI::IsMember({"csv", "json"}));

  auto* selftest = app.add_subcommand("selftest", "run built-in numerical checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : lossreg::cli::kConfigError;
  }

  try {
    if (*train) return lossreg::cli::cmd_train(load(train_flags), train_options(train_flags), std::cout, std::cerr);
    if (*grid) {
      lossreg::cli::GridCommandOptions opts;
      opts.train = train_options(grid_flags);
      opts.grid.runs_per_point = grid_runs;
      opts.grid.max_points = max_points;
      opts.final_runs = final_runs;
      std::vector<lossreg::harness::GridAxis> parsed;
      for (const auto& a : axes) parsed.push_back(lossreg::cli::parse_grid_axis(a));
      return lossreg::cli::cmd_grid(load(grid_flags), parsed, opts, std::cout, std::cerr);
    }
    if (*report) {
      lossreg::cli::TrainOptions opts;
      opts.out = report_out;
      opts.format = lossreg::harness::parse_report_format(report_format);
      return lossreg::cli::cmd_report({inputs.begin(), inputs.end()}, opts, std::cout, std::cerr);
    }
    if (*selftest) return lossreg::cli::cmd_selftest(std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return lossreg::cli::exit_code_for(e);
  }
  return lossreg::cli::kOk;
}
