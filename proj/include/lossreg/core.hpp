#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace lossreg {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using MatrixXd = Matrix<double>;

/// The only entropy source in the toolkit. Every stream is derived from an
/// explicit seed; there is no hidden global generator.
using Rng = std::mt19937_64;

/// Independent, reproducible sub-stream `stream` of a run seeded with `seed`.
inline Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), 0x9e3779b9u};
  return Rng(seq);
}

/// Class indices of a batch; every entry lies in [0, num_classes).
struct LabelBatch {
  std::vector<int> classes;
  int num_classes = 0;

  std::size_t size() const { return classes.size(); }
  bool operator==(const LabelBatch&) const = default;
};

/// Real-valued (MinMax-scaled) regression targets of a batch.
using TargetBatch = Vector<double>;

// Error taxonomy. Each failure mode named by the toolkit maps onto one type so
// callers (and the CLI exit-code mapping) can tell them apart.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};
struct ContractError : std::logic_error {
  using std::logic_error::logic_error;
};
struct UnsupportedError : std::logic_error {
  using std::logic_error::logic_error;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace lossreg
