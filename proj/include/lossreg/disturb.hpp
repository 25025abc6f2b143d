#pragma once

// Loss-layer regularizers. Each operation is a pure function of its inputs and
// the caller's RNG: inputs are never modified, and identical RNG state yields
// bit-identical output.
//
//   disturb_labels             random label resampling (classification)
//   directional_disturb_labels same, restricted to confidently predicted samples
//   disturb_values             additive noise on a random subset of targets
//   disturb_errors             additive noise on targets already fit within rho

#include <string_view>
#include <vector>

#include "lossreg/core.hpp"

namespace lossreg::disturb {

enum class Method {
  none,
  disturb_label,
  directional_disturb_label,
  disturb_value,
  disturb_error,
  disturb_value_error,  // disturb_value followed by disturb_error
};
enum class NoiseKind { gaussian, laplacian };
enum class SigmaSchedule { constant, cosine_anneal };
/// Which quantity a cosine_anneal schedule shrinks.
enum class AnnealTarget { sigma, alpha };

std::string_view to_string(Method m);
std::string_view to_string(NoiseKind k);
std::string_view to_string(SigmaSchedule s);
std::string_view to_string(AnnealTarget t);
Method parse_method(std::string_view s);
NoiseKind parse_noise_kind(std::string_view s);
SigmaSchedule parse_schedule(std::string_view s);
AnnealTarget parse_anneal_target(std::string_view s);

struct RegularizerSpec {
  Method method = Method::none;
  double alpha_pct = 0.0;  // percent of the batch eligible for disturbance
  double sigma = 0.01;     // noise std on MinMax-scaled targets
  double rho = 0.0;        // residual boundary for disturb_error
  NoiseKind noise = NoiseKind::gaussian;
  SigmaSchedule schedule = SigmaSchedule::constant;
  AnnealTarget anneal_target = AnnealTarget::sigma;
  double confidence_threshold = 0.5;  // cos(pi/3)

  bool for_classification() const;
  bool for_regression() const;
  /// True when the method consumes the current batch predictions.
  bool needs_predictions() const;
  /// Range checks; throws DomainError.
  void validate() const;
};

/// Positions touched by one call, in increasing order. For label methods these
/// are the resampled positions (a resampled label may equal the original).
struct DisturbTrace {
  std::vector<std::size_t> selected;
  std::size_t candidates = 0;  // directional_disturb_label only
};

/// floor(alpha_pct / 100 * batch_size).
std::size_t disturb_count(double alpha_pct, std::size_t batch_size);

struct LabelProbabilities {
  double true_class;   // 1 - (C-1) alpha / (100 C)
  double other_class;  // alpha / (100 C)
};
/// Multinoulli weights used to resample a selected label. Throws DomainError
/// when alpha is large enough to make the true-class weight negative.
LabelProbabilities label_probabilities(double alpha_pct, int num_classes);

/// Draw from the resampling distribution around `true_class`.
int resample_label(int true_class, int num_classes, const LabelProbabilities& probs, Rng& rng);

/// Picks floor(alpha N / 100) positions uniformly without replacement and
/// resamples each from the multinoulli distribution.
LabelBatch disturb_labels(const LabelBatch& labels, double alpha_pct, Rng& rng, DisturbTrace* trace = nullptr);

/// probs[n, label_n] / ||probs[n, :]||_2, i.e. the cosine between the one-hot
/// ground truth and the predicted distribution.
Vector<double> confidence_scores(const LabelBatch& labels, const MatrixXd& probs);

/// disturb_labels restricted to samples whose confidence score reaches the
/// threshold; the count is floor(alpha N / 100) capped by the candidate count.
LabelBatch directional_disturb_labels(const LabelBatch& labels, const MatrixXd& probs,
                                      const RegularizerSpec& spec, Rng& rng, DisturbTrace* trace = nullptr);

/// sigma_max * (1 + cos(pi * epoch / (total_epochs - 1))) / 2.
double sigma_at_epoch(double sigma_max, std::size_t epoch, std::size_t total_epochs);

/// Zero-mean noise with standard deviation `sigma`. Laplacian noise uses the
/// scale sigma / sqrt(2) so both kinds have variance sigma^2.
double sample_noise(NoiseKind kind, double sigma, Rng& rng);

TargetBatch disturb_values(const TargetBatch& targets, const RegularizerSpec& spec, std::size_t epoch,
                           std::size_t total_epochs, Rng& rng, DisturbTrace* trace = nullptr);

/// Adds N(0, sigma^2) to every target with |y - yhat| < rho.
TargetBatch disturb_errors(const TargetBatch& targets, const Vector<double>& predictions,
                           const RegularizerSpec& spec, Rng& rng, DisturbTrace* trace = nullptr);

}  // namespace lossreg::disturb
