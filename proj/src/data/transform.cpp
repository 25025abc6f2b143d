#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "lossreg/data.hpp"

namespace lossreg::data {

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.name = name;
  out.task = task;
  out.num_classes = num_classes;
  out.feature_names = feature_names;
  out.feature_scaler = feature_scaler;
  out.target_scaler = target_scaler;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.features.row(static_cast<Eigen::Index>(i)) = features.row(static_cast<Eigen::Index>(rows[i]));
  if (task == Task::classification) {
    out.labels.reserve(rows.size());
    for (auto r : rows) out.labels.push_back(labels[r]);
  } else {
    out.values.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) out.values(static_cast<Eigen::Index>(i)) = values(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

LabelBatch Dataset::label_batch(std::span<const std::size_t> rows) const {
  LabelBatch batch;
  batch.num_classes = num_classes;
  batch.classes.reserve(rows.size());
  for (auto r : rows) batch.classes.push_back(labels[r]);
  return batch;
}

TargetBatch Dataset::target_batch(std::span<const std::size_t> rows) const {
  TargetBatch batch(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) batch(static_cast<Eigen::Index>(i)) = values(static_cast<Eigen::Index>(rows[i]));
  return batch;
}

MinMaxParams minmax_fit(const MatrixXd& x) {
  if (x.rows() == 0) throw DomainError("cannot fit a scaler on zero rows");
  return {x.colwise().minCoeff(), x.colwise().maxCoeff()};
}

MinMaxParams minmax_fit(const Vector<double>& v) {
  if (v.size() == 0) throw DomainError("cannot fit a scaler on zero rows");
  MinMaxParams p{RowVector<double>(1), RowVector<double>(1)};
  p.min(0) = v.minCoeff();
  p.max(0) = v.maxCoeff();
  return p;
}

MatrixXd minmax_apply(const MatrixXd& x, const MinMaxParams& params) {
  if (x.cols() != params.columns())
    throw ShapeError(fmt::format("scaler fitted on {} columns applied to {}", params.columns(), x.cols()));
  MatrixXd out(x.rows(), x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double range = params.max(c) - params.min(c);
    if (range > 0.0)
      out.col(c) = (x.col(c).array() - params.min(c)) / range;
    else
      out.col(c).setZero();
  }
  return out;
}

Vector<double> minmax_apply(const Vector<double>& v, const MinMaxParams& params) {
  if (params.columns() != 1) throw ShapeError("target scaler must have exactly one column");
  return minmax_apply(MatrixXd(v), params).col(0);
}

MatrixXd minmax_invert(const MatrixXd& x, const MinMaxParams& params) {
  if (x.cols() != params.columns())
    throw ShapeError(fmt::format("scaler fitted on {} columns applied to {}", params.columns(), x.cols()));
  MatrixXd out(x.rows(), x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double range = params.max(c) - params.min(c);
    if (range > 0.0)
      out.col(c) = (x.col(c).array() * range + params.min(c)).matrix();
    else
      out.col(c).setConstant(params.min(c));
  }
  return out;
}

Vector<double> minmax_invert(const Vector<double>& v, const MinMaxParams& params) {
  if (params.columns() != 1) throw ShapeError("target scaler must have exactly one column");
  return minmax_invert(MatrixXd(v), params).col(0);
}

void scale_split(Dataset& train, Dataset& test, bool scale_features) {
  if (scale_features) {
    const auto fp = minmax_fit(train.features);
    train.features = minmax_apply(train.features, fp);
    test.features = minmax_apply(test.features, fp);
    train.feature_scaler = test.feature_scaler = fp;
  }
  if (train.task == Task::regression) {
    const auto tp = minmax_fit(train.values);
    train.values = minmax_apply(train.values, tp);
    test.values = minmax_apply(test.values, tp);
    train.target_scaler = test.target_scaler = tp;
  }
}

std::pair<Dataset, Dataset> split_shuffle(const Dataset& ds, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw DomainError("train fraction must lie in (0, 1)");
  const std::size_t n = ds.size();
  if (n < 2) throw DomainError("splitting needs at least 2 rows");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::ceil(train_fraction * static_cast<double>(n) - 1e-9));
  if (n_train == 0 || n_train >= n)
    throw DomainError(fmt::format("fraction {} of {} rows leaves an empty split", train_fraction, n));
  const std::span<const std::size_t> all(order);
  return {ds.subset(all.first(n_train)), ds.subset(all.subspan(n_train))};
}

}  // namespace lossreg::data
