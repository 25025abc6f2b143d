#include <gtest/gtest.h>

#include <algorithm>
#include <cstdint>

#include <Eigen/Dense>

#include "lossreg/data.hpp"
#include "test_support.hpp"

namespace {

using namespace lossreg;
using namespace lossreg::data;
using lossreg::testing::temp_path;
using lossreg::testing::write_file;

const std::filesystem::path kDataDir = LOSSREG_DATA_DIR;

std::string be32(std::uint32_t v) {
  return {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8), static_cast<char>(v)};
}

std::string idx_images(std::uint32_t magic, std::uint32_t n, std::uint32_t rows, std::uint32_t cols,
                       const std::string& pixels) {
  return be32(magic) + be32(n) + be32(rows) + be32(cols) + pixels;
}

std::string idx_labels(std::uint32_t magic, std::uint32_t n, const std::string& labels) {
  return be32(magic) + be32(n) + labels;
}

TEST(Csv, SmallRegressionFile) {
  const auto path = temp_path("small.csv");
  write_file(path, "a,b,y\n1,2,3\n4,5,6\n7,8,9.5\n");
  const auto ds = load_csv(path, "y", Task::regression);
  EXPECT_EQ(ds.size(), 3u);
  EXPECT_EQ(ds.feature_count(), 2u);
  EXPECT_FALSE(ds.feature_scaler.has_value());
  EXPECT_EQ(ds.feature_names, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(ds.features(2, 1), 8.0);
  EXPECT_EQ(ds.values(2), 9.5);
  EXPECT_EQ(ds.dropped_rows, 0u);
}

TEST(Csv, TargetColumnMayBeAnywhere) {
  const auto path = temp_path("middle.csv");
  write_file(path, "a,y,b\n1,10,2\n3,20,4\n");
  const auto ds = load_csv(path, "y", Task::regression);
  EXPECT_EQ(ds.feature_names, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(ds.features(1, 1), 4.0);
  EXPECT_EQ(ds.values(1), 20.0);
}

TEST(Csv, MalformedRowIsDroppedAndCounted) {
  std::string text = "x,y\n";
  for (int i = 0; i < 10; ++i) text += i == 4 ? "oops,1\n" : std::to_string(i) + "," + std::to_string(2 * i) + "\n";
  const auto path = temp_path("malformed.csv");
  write_file(path, text);
  const auto ds = load_csv(path, "y", Task::regression);
  EXPECT_EQ(ds.size(), 9u);
  EXPECT_EQ(ds.dropped_rows, 1u);
}

TEST(Csv, MissingCellsAndShortRowsAreDropped) {
  const auto path = temp_path("short.csv");
  write_file(path, "x,y\r\n1,2\r\n,3\r\n4\r\n5,6\r\n");
  const auto ds = load_csv(path, "y", Task::regression);
  EXPECT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds.dropped_rows, 2u);
}

TEST(Csv, ClassificationTargetsInFirstAppearanceOrder) {
  const auto path = temp_path("cls.csv");
  write_file(path, "f,label\n0.1,7\n0.2,3\n0.3,7\n0.4,5\n");
  const auto ds = load_csv(path, "label", Task::classification);
  EXPECT_EQ(ds.labels, (std::vector<int>{0, 1, 0, 2}));
  EXPECT_EQ(ds.num_classes, 3);
}

TEST(Csv, DistinctErrors) {
  EXPECT_THROW(load_csv(temp_path("does_not_exist.csv"), "y", Task::regression), FileNotFoundError);
  const auto path = temp_path("cols.csv");
  write_file(path, "a,b\n1,2\n");
  EXPECT_THROW(load_csv(path, "y", Task::regression), MissingColumnError);
  const auto empty = temp_path("empty_rows.csv");
  write_file(empty, "a,y\nx,z\n");
  EXPECT_THROW(load_csv(empty, "y", Task::regression), EmptyDatasetError);
}

TEST(Csv, BundledBostonHousing) {
  const auto ds = load_csv(kDataDir / "boston_housing.csv", "medv", Task::regression);
  EXPECT_EQ(ds.size(), 506u);
  EXPECT_EQ(ds.feature_count(), 13u);
  EXPECT_EQ(ds.dropped_rows, 0u);
  EXPECT_EQ(ds.values.minCoeff(), 5.0);
  EXPECT_EQ(ds.values.maxCoeff(), 50.0);
}

TEST(MinMax, Examples) {
  MatrixXd x(3, 2);
  x << 2, 5, 4, 5, 6, 5;
  const auto params = minmax_fit(x);
  const MatrixXd s = minmax_apply(x, params);
  EXPECT_EQ(s(0, 0), 0.0);
  EXPECT_EQ(s(1, 0), 0.5);
  EXPECT_EQ(s(2, 0), 1.0);
  EXPECT_EQ(s.col(1), Vector<double>::Zero(3));
  EXPECT_EQ(minmax_invert(s, params).col(1), Vector<double>::Constant(3, 5.0));
  MatrixXd t(1, 2);
  t << 8, 5;
  EXPECT_DOUBLE_EQ(minmax_apply(t, params)(0, 0), 1.5);
}

TEST(MinMax, VectorOverloads) {
  Vector<double> v(4);
  v << -1, 3, 1, 0;
  const auto params = minmax_fit(v);
  const auto s = minmax_apply(v, params);
  EXPECT_EQ(s(0), 0.0);
  EXPECT_EQ(s(1), 1.0);
  EXPECT_EQ(s(2), 0.5);
  EXPECT_LT((minmax_invert(s, params) - v).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(MinMax, RoundTripAndRange) {
  Rng rng(1);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  MatrixXd x(40, 25);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
  const auto params = minmax_fit(x);
  const MatrixXd s = minmax_apply(x, params);
  EXPECT_GE(s.minCoeff(), 0.0);
  EXPECT_LE(s.maxCoeff(), 1.0);
  EXPECT_LE((minmax_invert(s, params) - x).cwiseAbs().maxCoeff(), 1e-12 * 50.0);
  for (Eigen::Index c = 0; c < x.cols(); ++c) EXPECT_GE(params.max(c), params.min(c));
}

TEST(MinMax, ShapeMismatchThrows) {
  const auto params = minmax_fit(MatrixXd::Random(3, 2).eval());
  EXPECT_THROW(minmax_apply(MatrixXd::Zero(3, 3).eval(), params), ShapeError);
  EXPECT_THROW(minmax_fit(MatrixXd(0, 2)), DomainError);
}

Dataset numbered(std::size_t n) {
  Dataset ds;
  ds.task = Task::regression;
  ds.features.resize(static_cast<Eigen::Index>(n), 1);
  ds.values.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    ds.features(static_cast<Eigen::Index>(i), 0) = static_cast<double>(i);
    ds.values(static_cast<Eigen::Index>(i)) = 100.0 + static_cast<double>(i);
  }
  return ds;
}

TEST(Split, Sizes) {
  auto [a, b] = split_shuffle(numbered(10), 0.5, 3);
  EXPECT_EQ(a.size(), 5u);
  EXPECT_EQ(b.size(), 5u);
  auto [c, d] = split_shuffle(numbered(7), 0.5, 3);
  EXPECT_EQ(c.size(), 4u);
  EXPECT_EQ(d.size(), 3u);
  auto [e, f] = split_shuffle(numbered(506), 0.5, 3);
  EXPECT_EQ(e.size(), 253u);
}

TEST(Split, DeterministicPerSeed) {
  const auto ds = numbered(50);
  const auto [a1, b1] = split_shuffle(ds, 0.6, 12);
  const auto [a2, b2] = split_shuffle(ds, 0.6, 12);
  const auto [a3, b3] = split_shuffle(ds, 0.6, 13);
  EXPECT_EQ(a1.features, a2.features);
  EXPECT_EQ(b1.values, b2.values);
  EXPECT_NE(a1.features, a3.features);
}

TEST(Split, PartitionsRowsAndKeepsPairs) {
  const auto ds = numbered(31);
  const auto [train, test] = split_shuffle(ds, 0.35, 99);
  std::vector<double> seen;
  for (const auto* part : {&train, &test})
    for (std::size_t i = 0; i < part->size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      EXPECT_EQ(part->values(r), 100.0 + part->features(r, 0));
      seen.push_back(part->features(r, 0));
    }
  std::sort(seen.begin(), seen.end());
  for (std::size_t i = 0; i < seen.size(); ++i) EXPECT_EQ(seen[i], static_cast<double>(i));
  EXPECT_EQ(seen.size(), 31u);
}

TEST(Split, Errors) {
  EXPECT_THROW(split_shuffle(numbered(1), 0.5, 1), DomainError);
  EXPECT_THROW(split_shuffle(numbered(10), 0.0, 1), DomainError);
  EXPECT_THROW(split_shuffle(numbered(10), 1.0, 1), DomainError);
}

TEST(ScaleSplit, UsesTrainingRowsOnly) {
  const auto ds = make_synthetic_regression(40, 3, 3, 0.1, 5);
  auto [train, test] = split_shuffle(ds, 0.5, 1);
  auto test_variant = test;
  test_variant.features.array() *= 1000.0;
  test_variant.values.array() += 50.0;
  auto train_a = train, train_b = train;
  scale_split(train_a, test, true);
  scale_split(train_b, test_variant, true);
  ASSERT_TRUE(train_a.feature_scaler && train_a.target_scaler);
  EXPECT_EQ(train_a.feature_scaler->min, minmax_fit(train.features).min);
  EXPECT_EQ(train_a.feature_scaler->max, train_b.feature_scaler->max);
  EXPECT_EQ(train_a.target_scaler->min, train_b.target_scaler->min);
  EXPECT_EQ(train_a.features, train_b.features);
  EXPECT_GE(train_a.features.minCoeff(), 0.0);
  EXPECT_LE(train_a.values.maxCoeff(), 1.0);
}

TEST(ScaleSplit, FeaturesCanBeLeftAlone) {
  const auto ds = make_synthetic_classification(30, 3, 4, 10.0, 2);
  auto [train, test] = split_shuffle(ds, 0.5, 1);
  const MatrixXd before = train.features;
  scale_split(train, test, false);
  EXPECT_EQ(train.features, before);
}

TEST(Synthetic, NoiselessTargetsAreExactlyLinear) {
  const auto ds = make_synthetic_regression(200, 12, 5, 0.0, 3);
  const Vector<double> coef = ds.features.colPivHouseholderQr().solve(ds.values);
  EXPECT_LT((ds.features * coef - ds.values).cwiseAbs().maxCoeff(), 1e-10);
  for (Eigen::Index j = 5; j < 12; ++j) EXPECT_NEAR(coef(j), 0.0, 1e-10);
}

TEST(Synthetic, RegressionShapesAndDeterminism) {
  const auto a = make_synthetic_regression(5000, 30, 10, 0.1, 8);
  EXPECT_EQ(a.features.rows(), 5000);
  EXPECT_EQ(a.features.cols(), 30);
  EXPECT_EQ(a.values.size(), 5000);
  const auto b = make_synthetic_regression(5000, 30, 10, 0.1, 8);
  EXPECT_EQ(a.features, b.features);
  EXPECT_EQ(a.values, b.values);
  EXPECT_NE(a.values, make_synthetic_regression(5000, 30, 10, 0.1, 9).values);
  EXPECT_THROW(make_synthetic_regression(10, 3, 4, 0.1, 1), DomainError);
}

TEST(Synthetic, ClassificationIsBalanced) {
  const auto ds = make_synthetic_classification(1000, 10, 12, 10.0, 4);
  std::vector<int> counts(10, 0);
  for (int l : ds.labels) ++counts[static_cast<std::size_t>(l)];
  for (int c : counts) EXPECT_EQ(c, 100);
  const auto odd = make_synthetic_classification(23, 4, 2, 10.0, 4);
  std::vector<int> odd_counts(4, 0);
  for (int l : odd.labels) ++odd_counts[static_cast<std::size_t>(l)];
  EXPECT_LE(*std::max_element(odd_counts.begin(), odd_counts.end()) - *std::min_element(odd_counts.begin(), odd_counts.end()), 1);
}

TEST(Synthetic, WellSeparatedBlobsAreNearestCentroidSeparable) {
  for (auto [classes, p] : {std::pair{4, 8}, std::pair{5, 2}}) {
    const auto ds = make_synthetic_classification(400, classes, static_cast<std::size_t>(p), 12.0, 6);
    MatrixXd centroids = MatrixXd::Zero(classes, p);
    std::vector<double> counts(static_cast<std::size_t>(classes), 0.0);
    for (std::size_t i = 0; i < ds.size(); ++i) {
      centroids.row(ds.labels[i]) += ds.features.row(static_cast<Eigen::Index>(i));
      counts[static_cast<std::size_t>(ds.labels[i])] += 1.0;
    }
    for (int c = 0; c < classes; ++c) centroids.row(c) /= counts[static_cast<std::size_t>(c)];
    for (int a = 0; a < classes; ++a)
      for (int b = a + 1; b < classes; ++b) EXPECT_GT((centroids.row(a) - centroids.row(b)).norm(), 10.0);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      Eigen::Index best = 0;
      (centroids.rowwise() - ds.features.row(static_cast<Eigen::Index>(i))).rowwise().squaredNorm().minCoeff(&best);
      correct += static_cast<int>(best) == ds.labels[i];
    }
    EXPECT_EQ(correct, ds.size());
  }
}

TEST(Idx, ParsesHandBuiltFiles) {
  const auto img = temp_path("ok-images.idx");
  const auto lab = temp_path("ok-labels.idx");
  write_file(img, idx_images(0x803, 2, 2, 2, std::string("\x00\x00\x00\x00\xff\x00\x80\x01", 8)));
  write_file(lab, idx_labels(0x801, 2, std::string("\x03\x09", 2)));
  const auto ds = load_idx(img, lab);
  ASSERT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds.feature_count(), 4u);
  EXPECT_EQ(ds.features.row(0), RowVector<double>::Zero(4));
  EXPECT_EQ(ds.features(1, 0), 1.0);
  EXPECT_EQ(ds.features(1, 2), 128.0 / 255.0);
  EXPECT_EQ(ds.labels, (std::vector<int>{3, 9}));
  EXPECT_EQ(ds.num_classes, 10);
}

TEST(Idx, DistinctErrors) {
  const auto img = temp_path("err-images.idx");
  const auto lab = temp_path("err-labels.idx");
  const std::string four(4, '\x01');
  write_file(lab, idx_labels(0x801, 1, "\x01"));

  write_file(img, idx_images(0x802, 1, 2, 2, four));
  EXPECT_THROW(load_idx(img, lab), BadMagicError);

  write_file(img, idx_images(0x803, 2, 2, 2, four + four));
  EXPECT_THROW(load_idx(img, lab), CountMismatchError);

  write_file(img, idx_images(0x803, 1, 2, 2, "\x01\x02"));
  EXPECT_THROW(load_idx(img, lab), TruncatedFileError);

  write_file(img, be32(0x803));
  EXPECT_THROW(load_idx(img, lab), TruncatedFileError);

  EXPECT_THROW(load_idx(temp_path("missing-images.idx"), lab), FileNotFoundError);
}

TEST(Idx, BundledMnistSubset) {
  const auto train = load_idx(kDataDir / "mnist5k-train-images.idx", kDataDir / "mnist5k-train-labels.idx");
  EXPECT_EQ(train.size(), 5000u);
  EXPECT_EQ(train.feature_count(), 784u);
  EXPECT_EQ(train.num_classes, 10);
  EXPECT_GE(train.features.minCoeff(), 0.0);
  EXPECT_LE(train.features.maxCoeff(), 1.0);
  std::vector<int> counts(10, 0);
  for (int l : train.labels) {
    ASSERT_GE(l, 0);
    ASSERT_LE(l, 9);
    ++counts[static_cast<std::size_t>(l)];
  }
  for (int c : counts) EXPECT_EQ(c, 500);
  const auto test = load_idx(kDataDir / "mnist5k-test-images.idx", kDataDir / "mnist5k-test-labels.idx");
  EXPECT_EQ(test.size(), 5000u);
}

TEST(Dataset, SubsetAndBatches) {
  const auto ds = numbered(6);
  const std::vector<std::size_t> rows{4, 1};
  const auto sub = ds.subset(rows);
  EXPECT_EQ(sub.features(0, 0), 4.0);
  EXPECT_EQ(sub.values(1), 101.0);
  EXPECT_EQ(ds.target_batch(rows)(0), 104.0);
  auto cls = make_synthetic_classification(6, 3, 2, 10.0, 1);
  const auto batch = cls.label_batch(rows);
  EXPECT_EQ(batch.num_classes, 3);
  EXPECT_EQ(batch.classes, (std::vector<int>{cls.labels[4], cls.labels[1]}));
}

}  // namespace
