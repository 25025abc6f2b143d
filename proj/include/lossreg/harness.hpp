#pragma once

// Seeded experiment runner: per-run split, scaling, training with a
// loss-layer regularizer, clean evaluation, aggregation and grid search.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lossreg/data.hpp"
#include "lossreg/disturb.hpp"
#include "lossreg/nn/network.hpp"
#include "lossreg/nn/optimizer.hpp"

namespace lossreg::harness {

enum class DatasetKind { csv, idx, synthetic_regression, synthetic_classification };

struct DatasetSource {
  DatasetKind kind = DatasetKind::synthetic_regression;
  std::string name;  // label in reports; derived from the source when empty

  // csv
  std::filesystem::path path;
  std::string target_column;
  data::Task task = data::Task::regression;

  // idx; the optional test pair replaces the shuffled split
  std::filesystem::path images;
  std::filesystem::path labels;
  std::filesystem::path test_images;
  std::filesystem::path test_labels;
  std::size_t limit = 0;  // keep only the first `limit` training rows (0 = all)

  // relative paths above resolve against this directory
  std::filesystem::path base_dir;

  // synthetic
  std::size_t samples = 200;
  std::size_t features = 30;
  std::size_t informative = 10;
  double noise_std = 0.1;
  int classes = 2;
  double separation = 10.0;
  std::uint64_t data_seed = 0;

  data::Task resolved_task() const;
  std::string display_name() const;
};

enum class LrSchedule { constant, step_decay };

struct OptimizerConfig {
  nn::OptimizerKind kind = nn::OptimizerKind::adam;
  double lr = 1e-3;
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  LrSchedule schedule = LrSchedule::constant;
};

struct NetworkConfig {
  std::vector<std::size_t> hidden;
  double dropout_rate = 0.0;
  double l2_lambda = 0.0;
};

struct ExperimentConfig {
  DatasetSource dataset;
  NetworkConfig network;
  disturb::RegularizerSpec regularizer;
  OptimizerConfig optimizer;
  std::size_t epochs = 200;
  std::size_t batch_size = 32;
  std::size_t runs = 20;
  std::uint64_t base_seed = 0;
  double train_fraction = 0.5;
  std::string label;  // method label in reports; derived when empty

  /// Fills task-dependent defaults for a classification or regression task.
  static ExperimentConfig defaults_for(data::Task task);
  /// Throws ConfigError on invalid or incompatible settings.
  void validate() const;
  std::string method_label() const;
};

/// Training pool plus an optional fixed test split.
struct LoadedData {
  data::Dataset pool;
  std::optional<data::Dataset> fixed_test;
};

LoadedData load_data(const DatasetSource& source);

struct RunReport {
  std::uint64_t seed = 0;
  double final_metric = 0.0;  // test RMSE (scaled) or misclassification %
  std::vector<double> train_curve;
  std::vector<double> test_curve;
  std::vector<std::size_t> disturbed_per_epoch;  // labels/targets handed to the disturbance
  double wall_seconds = 0.0;
  std::string digest;
};

struct Summary {
  std::string dataset;
  std::string method;
  double alpha = 0.0;
  double sigma = 0.0;
  double rho = 0.0;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (N - 1)
  std::size_t runs = 0;
  std::vector<double> metrics;  // empty when read back from CSV
  std::string digest;

  bool operator==(const Summary&) const = default;
};

/// Called after every epoch with the epoch index and the current network.
using EpochObserver = std::function<void(std::size_t, const nn::Network<double>&)>;

struct RunOptions {
  unsigned threads = 1;  // independent runs executed concurrently
};

/// Executes a single run with seed `seed` on already-loaded data.
RunReport run_single(const ExperimentConfig& cfg, const LoadedData& data, std::uint64_t seed,
                     const std::string& digest, const EpochObserver& observer = {});

/// Runs base_seed .. base_seed + runs - 1. Results do not depend on `threads`.
std::vector<RunReport> run_experiment(const ExperimentConfig& cfg, const LoadedData& data, RunOptions opts = {});
std::vector<RunReport> run_experiment(const ExperimentConfig& cfg, RunOptions opts = {});

/// Mean and sample std of the final metrics. All reports must share a digest.
Summary aggregate(const std::vector<RunReport>& reports);
/// aggregate() plus dataset/method/hyperparameter labels taken from `cfg`.
Summary summarize(const ExperimentConfig& cfg, const std::vector<RunReport>& reports);

// --- grid search ------------------------------------------------------------

struct GridAxis {
  std::string name;
  std::vector<double> values;
};

struct GridPoint {
  std::vector<double> values;  // one per axis
  Summary summary;
};

struct GridResult {
  std::vector<GridAxis> axes;
  std::vector<GridPoint> points;
  std::size_t best = 0;

  const GridPoint& best_point() const { return points.at(best); }
};

struct GridOptions {
  std::size_t runs_per_point = 5;
  std::size_t max_points = 256;
  RunOptions run;
};

/// Assigns a numeric config field by name ("alpha_pct", "regularizer.rho",
/// "l2_lambda", ...). Throws ConfigError for unknown names.
void set_field(ExperimentConfig& cfg, const std::string& name, double value);

/// Evaluates the cartesian product of `axes` and picks the point with the
/// lowest mean test metric (first in grid order on ties).
GridResult grid_search(const ExperimentConfig& base, const std::vector<GridAxis>& axes, GridOptions opts = {});

// --- reports ------------------------------------------------------------------

enum class ReportFormat { csv, json };
ReportFormat parse_report_format(std::string_view s);

/// CSV: header + one row per summary. JSON: array of summary objects with
/// per-run metrics. Output is byte-stable for identical inputs.
void emit_report(const std::vector<Summary>& summaries, ReportFormat format, const std::filesystem::path& path);
std::string format_report(const std::vector<Summary>& summaries, ReportFormat format);
/// Reads either format back (detected from content).
std::vector<Summary> read_report(const std::filesystem::path& path);

/// Shortest round-trip decimal form used by every report.
std::string format_number(double v);

}  // namespace lossreg::harness
