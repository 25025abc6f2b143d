#include <fmt/format.h>

#include "lossreg/data.hpp"

namespace lossreg::data {

Dataset make_synthetic_regression(std::size_t n, std::size_t p, std::size_t informative, double noise_std,
                                  std::uint64_t seed) {
  if (informative > p) throw DomainError("informative feature count exceeds p");
  if (!(noise_std >= 0.0)) throw DomainError("noise_std must be >= 0");
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> coef_dist(-1.0, 1.0);

  Dataset ds;
  ds.name = "synthetic_regression";
  ds.task = Task::regression;
  ds.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  for (Eigen::Index i = 0; i < ds.features.size(); ++i) ds.features.data()[i] = normal(rng);
  Vector<double> coef(static_cast<Eigen::Index>(informative));
  for (Eigen::Index j = 0; j < coef.size(); ++j) coef(j) = coef_dist(rng);
  ds.values = ds.features.leftCols(coef.size()) * coef;
  if (noise_std > 0.0)
    for (Eigen::Index i = 0; i < ds.values.size(); ++i) ds.values(i) += noise_std * normal(rng);
  for (std::size_t j = 0; j < p; ++j) ds.feature_names.push_back(fmt::format("x{}", j));
  return ds;
}

Dataset make_synthetic_classification(std::size_t n, int num_classes, std::size_t p, double separation,
                                      std::uint64_t seed) {
  if (num_classes < 2) throw DomainError("classification needs at least 2 classes");
  if (p < 1) throw DomainError("need at least one feature");
  const auto c = static_cast<std::size_t>(num_classes);
  // One-hot axes scaled by sep/sqrt(2) are pairwise exactly `separation`
  // apart; with fewer dimensions than classes the centres sit on a line.
  MatrixXd centres = MatrixXd::Zero(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(p));
  for (std::size_t k = 0; k < c; ++k) {
    if (p >= c)
      centres(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) = separation / std::sqrt(2.0);
    else
      centres(static_cast<Eigen::Index>(k), 0) = separation * static_cast<double>(k);
  }

  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset ds;
  ds.name = "synthetic_classification";
  ds.task = Task::classification;
  ds.num_classes = num_classes;
  ds.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  ds.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = static_cast<Eigen::Index>(i % c);
    ds.labels[i] = static_cast<int>(k);
    for (Eigen::Index j = 0; j < ds.features.cols(); ++j)
      ds.features(static_cast<Eigen::Index>(i), j) = centres(k, j) + normal(rng);
  }
  for (std::size_t j = 0; j < p; ++j) ds.feature_names.push_back(fmt::format("x{}", j));
  return ds;
}

}  // namespace lossreg::data
