#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lossreg/core.hpp"

namespace lossreg::data {

enum class Task { classification, regression };

Task parse_task(std::string_view s);
std::string_view to_string(Task t);

/// Per-column affine map (x - min) / (max - min) fitted on training rows.
struct MinMaxParams {
  RowVector<double> min;
  RowVector<double> max;

  Eigen::Index columns() const { return min.size(); }
};

struct Dataset {
  std::string name;
  Task task = Task::regression;
  MatrixXd features;                // N x p
  std::vector<int> labels;          // classification targets
  int num_classes = 0;
  Vector<double> values;            // regression targets
  std::vector<std::string> feature_names;
  std::optional<MinMaxParams> feature_scaler;
  std::optional<MinMaxParams> target_scaler;
  std::size_t dropped_rows = 0;     // rows rejected at load time

  std::size_t size() const { return static_cast<std::size_t>(features.rows()); }
  std::size_t feature_count() const { return static_cast<std::size_t>(features.cols()); }
  /// Copy of the given rows, in the given order; scalers are carried over.
  Dataset subset(std::span<const std::size_t> rows) const;
  LabelBatch label_batch(std::span<const std::size_t> rows) const;
  TargetBatch target_batch(std::span<const std::size_t> rows) const;
};

// --- errors ---------------------------------------------------------------

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct FileNotFoundError : DataError {
  using DataError::DataError;
};
struct MissingColumnError : DataError {
  using DataError::DataError;
};
struct EmptyDatasetError : DataError {
  using DataError::DataError;
};
struct BadMagicError : DataError {
  using DataError::DataError;
};
struct CountMismatchError : DataError {
  using DataError::DataError;
};
struct TruncatedFileError : DataError {
  using DataError::DataError;
};

// --- ingestion ------------------------------------------------------------

/// Comma-separated file with a mandatory header row and no quoting. Rows with
/// an unparseable or missing cell are dropped and counted in `dropped_rows`.
/// Classification targets become dense indices in order of first appearance.
Dataset load_csv(const std::filesystem::path& path, const std::string& target_column, Task task);

/// IDX image/label pair (magic 0x803 / 0x801, big-endian sizes, unsigned
/// bytes). Pixels are divided by 255 and each image flattened row-major.
Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path);

// --- scaling --------------------------------------------------------------

MinMaxParams minmax_fit(const MatrixXd& x);
MinMaxParams minmax_fit(const Vector<double>& v);
/// Constant columns map to 0. Values outside the fitted range are allowed.
MatrixXd minmax_apply(const MatrixXd& x, const MinMaxParams& params);
Vector<double> minmax_apply(const Vector<double>& v, const MinMaxParams& params);
/// Constant columns map back to their constant.
MatrixXd minmax_invert(const MatrixXd& x, const MinMaxParams& params);
Vector<double> minmax_invert(const Vector<double>& v, const MinMaxParams& params);

/// Fits feature (and, for regression, target) scalers on `train` and applies
/// them to both splits. Features are left alone when `scale_features` is false.
void scale_split(Dataset& train, Dataset& test, bool scale_features = true);

// --- splitting ------------------------------------------------------------

/// Seeded shuffle, then the first ceil(fraction * N) rows become the
/// training split.
std::pair<Dataset, Dataset> split_shuffle(const Dataset& ds, double train_fraction, std::uint64_t seed);

// --- synthetic ------------------------------------------------------------

/// Standard-normal features; the target is a seeded linear combination of the
/// first `informative` features plus N(0, noise_std^2).
Dataset make_synthetic_regression(std::size_t n, std::size_t p, std::size_t informative, double noise_std,
                                  std::uint64_t seed);

/// One isotropic unit-variance Gaussian blob per class. Centres are placed on
/// scaled simplex-like axes so every pair is at least `separation` apart;
/// class sizes differ by at most one.
Dataset make_synthetic_classification(std::size_t n, int num_classes, std::size_t p, double separation,
                                      std::uint64_t seed);

}  // namespace lossreg::data
