#include "lossreg/disturb.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <iterator>
#include <numeric>

#include <fmt/format.h>

namespace lossreg::disturb {

namespace {

std::vector<std::size_t> choose_positions(const std::vector<std::size_t>& pool, std::size_t k, Rng& rng) {
  std::vector<std::size_t> chosen;
  if (k == 0) return chosen;
  chosen.reserve(k);
  std::sample(pool.begin(), pool.end(), std::back_inserter(chosen), k, rng);
  return chosen;
}

std::vector<std::size_t> all_positions(std::size_t n) {
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  return pool;
}

void check_labels(const LabelBatch& labels) {
  if (labels.num_classes < 2) throw DomainError("label batches need at least 2 classes");
  for (int c : labels.classes)
    if (c < 0 || c >= labels.num_classes)
      throw DomainError(fmt::format("class index {} outside [0, {})", c, labels.num_classes));
}

LabelBatch resample_positions(const LabelBatch& labels, const std::vector<std::size_t>& positions,
                              double alpha_pct, Rng& rng) {
  LabelBatch out = labels;
  if (positions.empty()) return out;
  const auto probs = label_probabilities(alpha_pct, labels.num_classes);
  for (auto pos : positions) out.classes[pos] = resample_label(labels.classes[pos], labels.num_classes, probs, rng);
  return out;
}

void warn_unscaled_once(const TargetBatch& targets) {
  static std::atomic<bool> warned{false};
  if (targets.size() == 0) return;
  if (targets.minCoeff() >= 0.0 && targets.maxCoeff() <= 1.0) return;
  if (!warned.exchange(true))
    std::clog << "warning: disturb_values received targets outside [0, 1]; sigma assumes MinMax-scaled targets\n";
}

}  // namespace

std::string_view to_string(Method m) {
  switch (m) {
    case Method::none: return "none";
    case Method::disturb_label: return "disturb_label";
    case Method::directional_disturb_label: return "directional_disturb_label";
    case Method::disturb_value: return "disturb_value";
    case Method::disturb_error: return "disturb_error";
    case Method::disturb_value_error: return "disturb_value_error";
  }
  return "?";
}

std::string_view to_string(NoiseKind k) { return k == NoiseKind::gaussian ? "gaussian" : "laplacian"; }
std::string_view to_string(SigmaSchedule s) { return s == SigmaSchedule::constant ? "constant" : "cosine_anneal"; }
std::string_view to_string(AnnealTarget t) { return t == AnnealTarget::sigma ? "sigma" : "alpha"; }

Method parse_method(std::string_view s) {
  for (auto m : {Method::none, Method::disturb_label, Method::directional_disturb_label, Method::disturb_value,
                 Method::disturb_error, Method::disturb_value_error})
    if (to_string(m) == s) return m;
  throw ConfigError(fmt::format("unknown regularizer method '{}'", s));
}

NoiseKind parse_noise_kind(std::string_view s) {
  if (s == "gaussian") return NoiseKind::gaussian;
  if (s == "laplacian") return NoiseKind::laplacian;
  throw ConfigError(fmt::format("unknown noise kind '{}'", s));
}

SigmaSchedule parse_schedule(std::string_view s) {
  if (s == "constant") return SigmaSchedule::constant;
  if (s == "cosine_anneal") return SigmaSchedule::cosine_anneal;
  throw ConfigError(fmt::format("unknown sigma schedule '{}'", s));
}

AnnealTarget parse_anneal_target(std::string_view s) {
  if (s == "sigma") return AnnealTarget::sigma;
  if (s == "alpha") return AnnealTarget::alpha;
  throw ConfigError(fmt::format("unknown anneal target '{}'", s));
}

bool RegularizerSpec::for_classification() const {
  return method == Method::disturb_label || method == Method::directional_disturb_label;
}

bool RegularizerSpec::for_regression() const {
  return method == Method::disturb_value || method == Method::disturb_error ||
         method == Method::disturb_value_error;
}

bool RegularizerSpec::needs_predictions() const {
  return method == Method::directional_disturb_label || method == Method::disturb_error ||
         method == Method::disturb_value_error;
}

void RegularizerSpec::validate() const {
  if (!(alpha_pct >= 0.0 && alpha_pct <= 100.0)) throw DomainError("alpha_pct must lie in [0, 100]");
  if (!(sigma > 0.0)) throw DomainError("sigma must be > 0");
  if (!(rho >= 0.0)) throw DomainError("rho must be >= 0");
  if (!(confidence_threshold >= 0.0 && confidence_threshold <= 1.0))
    throw DomainError("confidence_threshold must lie in [0, 1]");
}

std::size_t disturb_count(double alpha_pct, std::size_t batch_size) {
  if (!(alpha_pct >= 0.0 && alpha_pct <= 100.0)) throw DomainError("alpha_pct must lie in [0, 100]");
  // alpha * N / 100 is exact for integral alpha; a relative nudge keeps
  // products such as 0.29 * 100 from flooring one short.
  const double k = alpha_pct * static_cast<double>(batch_size) / 100.0;
  return std::min(batch_size, static_cast<std::size_t>(std::floor(k * (1.0 + 1e-12))));
}

LabelProbabilities label_probabilities(double alpha_pct, int num_classes) {
  if (num_classes < 2) throw DomainError("label resampling needs at least 2 classes");
  const double c = num_classes;
  LabelProbabilities p{1.0 - (c - 1.0) * alpha_pct / (100.0 * c), alpha_pct / (100.0 * c)};
  if (alpha_pct < 0.0 || p.true_class < 0.0)
    throw DomainError(fmt::format("alpha {} gives a negative true-class probability for C={}", alpha_pct, num_classes));
  return p;
}

int resample_label(int true_class, int num_classes, const LabelProbabilities& probs, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (unit(rng) < probs.true_class) return true_class;
  // The remaining mass is spread evenly over the other C-1 classes.
  std::uniform_int_distribution<int> other(0, num_classes - 2);
  const int draw = other(rng);
  return draw >= true_class ? draw + 1 : draw;
}

LabelBatch disturb_labels(const LabelBatch& labels, double alpha_pct, Rng& rng, DisturbTrace* trace) {
  check_labels(labels);
  label_probabilities(alpha_pct, labels.num_classes);
  const auto k = disturb_count(alpha_pct, labels.size());
  const auto positions = choose_positions(all_positions(labels.size()), k, rng);
  if (trace) trace->selected = positions;
  return resample_positions(labels, positions, alpha_pct, rng);
}

Vector<double> confidence_scores(const LabelBatch& labels, const MatrixXd& probs) {
  if (static_cast<Eigen::Index>(labels.size()) != probs.rows())
    throw ShapeError(fmt::format("{} labels for {} probability rows", labels.size(), probs.rows()));
  Vector<double> scores(probs.rows());
  for (Eigen::Index n = 0; n < probs.rows(); ++n) {
    const int c = labels.classes[static_cast<std::size_t>(n)];
    if (c < 0 || c >= probs.cols()) throw DomainError(fmt::format("class index {} outside [0, {})", c, probs.cols()));
    const double norm = probs.row(n).norm();
    if (!(norm > 0.0)) throw ContractError("zero-norm probability row");
    scores(n) = probs(n, c) / norm;
  }
  return scores;
}

LabelBatch directional_disturb_labels(const LabelBatch& labels, const MatrixXd& probs, const RegularizerSpec& spec,
                                      Rng& rng, DisturbTrace* trace) {
  check_labels(labels);
  label_probabilities(spec.alpha_pct, labels.num_classes);
  const auto k = disturb_count(spec.alpha_pct, labels.size());
  const auto scores = confidence_scores(labels, probs);
  std::vector<std::size_t> candidates;
  for (Eigen::Index n = 0; n < scores.size(); ++n)
    if (scores(n) >= spec.confidence_threshold) candidates.push_back(static_cast<std::size_t>(n));
  const auto positions = choose_positions(candidates, std::min(k, candidates.size()), rng);
  if (trace) {
    trace->selected = positions;
    trace->candidates = candidates.size();
  }
  return resample_positions(labels, positions, spec.alpha_pct, rng);
}

double sigma_at_epoch(double sigma_max, std::size_t epoch, std::size_t total_epochs) {
  if (total_epochs < 2) throw DomainError("cosine annealing needs at least 2 epochs");
  if (epoch >= total_epochs) throw DomainError("epoch outside [0, total_epochs)");
  const double t = static_cast<double>(epoch) / static_cast<double>(total_epochs - 1);
  return sigma_max * 0.5 * (1.0 + std::cos(M_PI * t));
}

double sample_noise(NoiseKind kind, double sigma, Rng& rng) {
  if (kind == NoiseKind::gaussian) return std::normal_distribution<double>(0.0, sigma)(rng);
  // Laplace(0, b) is the difference of two Exp(1/b) draws.
  std::exponential_distribution<double> expo(1.0);
  const double b = sigma / std::sqrt(2.0);
  const double e1 = expo(rng);
  const double e2 = expo(rng);
  return b * (e1 - e2);
}

TargetBatch disturb_values(const TargetBatch& targets, const RegularizerSpec& spec, std::size_t epoch,
                           std::size_t total_epochs, Rng& rng, DisturbTrace* trace) {
  if (trace) trace->selected.clear();
  if (spec.alpha_pct == 0.0) return targets;
  warn_unscaled_once(targets);

  double sigma = spec.sigma;
  double alpha = spec.alpha_pct;
  if (spec.schedule == SigmaSchedule::cosine_anneal) {
    if (spec.anneal_target == AnnealTarget::sigma)
      sigma = sigma_at_epoch(spec.sigma, epoch, total_epochs);
    else
      alpha = sigma_at_epoch(spec.alpha_pct, epoch, total_epochs);
  }
  const auto k = disturb_count(alpha, static_cast<std::size_t>(targets.size()));
  const auto positions = choose_positions(all_positions(static_cast<std::size_t>(targets.size())), k, rng);
  TargetBatch out = targets;
  if (sigma > 0.0)
    for (auto pos : positions) out(static_cast<Eigen::Index>(pos)) += sample_noise(spec.noise, sigma, rng);
  if (trace) trace->selected = positions;
  return out;
}

TargetBatch disturb_errors(const TargetBatch& targets, const Vector<double>& predictions, const RegularizerSpec& spec,
                           Rng& rng, DisturbTrace* trace) {
  if (predictions.size() != targets.size())
    throw ShapeError(fmt::format("{} predictions for {} targets", predictions.size(), targets.size()));
  TargetBatch out = targets;
  std::vector<std::size_t> touched;
  for (Eigen::Index n = 0; n < targets.size(); ++n) {
    if (std::abs(targets(n) - predictions(n)) < spec.rho) {
      out(n) += sample_noise(NoiseKind::gaussian, spec.sigma, rng);
      touched.push_back(static_cast<std::size_t>(n));
    }
  }
  if (trace) trace->selected = std::move(touched);
  return out;
}

}  // namespace lossreg::disturb
