// Built-in numerical checks run by `lossreg selftest`.

#include <cmath>
#include <ostream>

#include <fmt/format.h>

#include "lossreg/cli.hpp"
#include "lossreg/data.hpp"
#include "lossreg/disturb.hpp"
#include "lossreg/nn/gradient_identity.hpp"
#include "lossreg/nn/optimizer.hpp"

namespace lossreg::cli {

namespace {

struct Check {
  std::string name;
  bool passed;
  std::string detail;
};

Check check_gradient_identity() {
  Rng rng(2021);
  std::normal_distribution<double> normal(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 25; ++trial) {
    nn::NetworkSpec spec{5, {8}, 1, nn::LossKind::mse, 0.0, trial % 2 ? 1e-3 : 0.0};
    const auto net = nn::Network<double>::initialized(spec, rng);
    const Eigen::Index n = 4 + trial % 9;
    MatrixXd x(n, 5);
    Vector<double> y(n), eps(n);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
    for (Eigen::Index i = 0; i < n; ++i) {
      y(i) = 0.5 + 0.2 * normal(rng);
      eps(i) = 0.01 * normal(rng);
    }
    worst = std::max(worst, nn::verify_gradient_identity(net, x, y, eps));
  }
  return {"disturbed-target gradient decomposition", worst < 1e-10, fmt::format("max deviation {:.3e}", worst)};
}

Check check_label_distribution() {
  constexpr int kClasses = 10;
  constexpr std::size_t kBatch = 1'000'000;
  constexpr double kAlpha = 10.0;
  LabelBatch labels{std::vector<int>(kBatch), kClasses};
  for (std::size_t i = 0; i < kBatch; ++i) labels.classes[i] = static_cast<int>(i % kClasses);
  Rng rng(7);
  disturb::DisturbTrace trace;
  const auto out = disturb::disturb_labels(labels, kAlpha, rng, &trace);

  // offsets (new - old) mod C, counted over the resampled positions only
  std::vector<double> counts(kClasses, 0.0);
  for (auto pos : trace.selected) ++counts[static_cast<std::size_t>((out.classes[pos] - labels.classes[pos] + kClasses) % kClasses)];
  const double n = static_cast<double>(trace.selected.size());
  const auto p = disturb::label_probabilities(kAlpha, kClasses);
  double worst_z = 0.0;
  for (int k = 0; k < kClasses; ++k) {
    const double target = k == 0 ? p.true_class : p.other_class;
    const double se = std::sqrt(target * (1.0 - target) / n);
    worst_z = std::max(worst_z, std::abs(counts[static_cast<std::size_t>(k)] / n - target) / se);
  }
  return {"label resampling frequencies", trace.selected.size() == 100'000 && worst_z < 3.0,
          fmt::format("{} resampled, worst |z| {:.2f}", trace.selected.size(), worst_z)};
}

Check check_confidence_gate() {
  Rng rng(11);
  disturb::RegularizerSpec spec;
  spec.method = disturb::Method::directional_disturb_label;
  spec.alpha_pct = 100.0;
  bool ok = true;
  for (int classes : {3, 10}) {
    LabelBatch labels{std::vector<int>(64), classes};
    for (std::size_t i = 0; i < labels.size(); ++i) labels.classes[i] = static_cast<int>(i) % classes;
    const MatrixXd probs = MatrixXd::Constant(64, classes, 1.0 / classes);
    disturb::DisturbTrace trace;
    disturb::directional_disturb_labels(labels, probs, spec, rng, &trace);
    const std::size_t expected = classes <= 4 ? 64 : 0;
    ok = ok && trace.candidates == expected && trace.selected.size() == expected;
  }
  return {"confidence gate on uniform predictions", ok, "C=3 all candidates, C=10 none"};
}

Check check_minmax() {
  Rng rng(5);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  MatrixXd x(50, 20);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
  x.col(3).setConstant(4.5);
  const auto params = data::minmax_fit(x);
  const double err = (data::minmax_invert(data::minmax_apply(x, params), params) - x).cwiseAbs().maxCoeff();
  return {"minmax round trip", err <= 1e-12 * 1e3, fmt::format("max error {:.3e}", err)};
}

Check check_lr_schedule() {
  const bool ok = nn::lr_at_epoch(1e-3, 0) == 1e-3 && std::abs(nn::lr_at_epoch(1e-3, 45) - 1e-4) < 1e-18 &&
                  std::abs(nn::lr_at_epoch(1e-3, 85) - 1e-6) < 1e-18;
  return {"step learning-rate decay", ok, "0.001 / 1e-4 / 1e-6 at epochs 0 / 45 / 85"};
}

}  // namespace

int cmd_selftest(std::ostream& out, std::ostream& err) {
  try {
    bool all = true;
    for (const auto& c : {check_gradient_identity(), check_label_distribution(), check_confidence_gate(), check_minmax(),
                          check_lr_schedule()}) {
      out << fmt::format("[{}] {}: {}\n", c.passed ? " ok " : "FAIL", c.name, c.detail);
      all = all && c.passed;
    }
    out << (all ? "selftest passed\n" : "selftest FAILED\n");
    return all ? kOk : kCheckFailed;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
}

}  // namespace lossreg::cli
