#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lossreg/harness.hpp"

namespace lossreg::cli {

enum ExitCode : int {
  kOk = 0,
  kCheckFailed = 1,  // selftest found a numerical problem
  kConfigError = 2,
  kRuntimeError = 3,
};

struct TrainOptions {
  std::filesystem::path out;  // empty: no report file
  harness::ReportFormat format = harness::ReportFormat::csv;
  unsigned threads = 1;
  int verbosity = 0;
};

struct GridCommandOptions {
  TrainOptions train;
  harness::GridOptions grid;
  std::size_t final_runs = 0;  // > 0: rerun the winning point with this many runs
};

/// "alpha_pct=10,20,50"
harness::GridAxis parse_grid_axis(const std::string& text);

int cmd_train(const harness::ExperimentConfig& cfg, const TrainOptions& opts, std::ostream& out, std::ostream& err);
int cmd_grid(const harness::ExperimentConfig& cfg, const std::vector<harness::GridAxis>& axes,
             const GridCommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_report(const std::vector<std::filesystem::path>& inputs, const TrainOptions& opts, std::ostream& out,
               std::ostream& err);
int cmd_selftest(std::ostream& out, std::ostream& err);

/// Maps an exception escaping a command onto an exit code.
int exit_code_for(const std::exception& e);

/// "0.08958 ±0.00123"
std::string format_mean_std(double mean, double std);

}  // namespace lossreg::cli
