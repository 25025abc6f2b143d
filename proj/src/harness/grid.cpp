#include <map>

#include <fmt/format.h>

#include "lossreg/harness.hpp"

namespace lossreg::harness {

void set_field(ExperimentConfig& cfg, const std::string& name, double value) {
  const std::map<std::string, double*, std::less<>> fields = {
      {"alpha_pct", &cfg.regularizer.alpha_pct},
      {"regularizer.alpha_pct", &cfg.regularizer.alpha_pct},
      {"sigma", &cfg.regularizer.sigma},
      {"regularizer.sigma", &cfg.regularizer.sigma},
      {"rho", &cfg.regularizer.rho},
      {"regularizer.rho", &cfg.regularizer.rho},
      {"confidence_threshold", &cfg.regularizer.confidence_threshold},
      {"regularizer.confidence_threshold", &cfg.regularizer.confidence_threshold},
      {"l2_lambda", &cfg.network.l2_lambda},
      {"network.l2_lambda", &cfg.network.l2_lambda},
      {"dropout_rate", &cfg.network.dropout_rate},
      {"network.dropout_rate", &cfg.network.dropout_rate},
      {"lr", &cfg.optimizer.lr},
      {"optimizer.lr", &cfg.optimizer.lr},
  };
  const auto it = fields.find(name);
  if (it == fields.end()) throw ConfigError(fmt::format("unknown grid parameter '{}'", name));
  *it->second = value;
}

GridResult grid_search(const ExperimentConfig& base, const std::vector<GridAxis>& axes, GridOptions opts) {
  std::size_t total = 1;
  for (const auto& axis : axes) {
    if (axis.values.empty()) throw ConfigError(fmt::format("grid axis '{}' has no values", axis.name));
    ExperimentConfig probe = base;
    set_field(probe, axis.name, axis.values.front());
    total *= axis.values.size();
    if (total > opts.max_points)
      throw ConfigError(fmt::format("grid has more than {} points", opts.max_points));
  }

  ExperimentConfig point_cfg = base;
  point_cfg.runs = opts.runs_per_point;
  point_cfg.validate();
  const LoadedData loaded = load_data(base.dataset);

  GridResult result;
  result.axes = axes;
  std::vector<std::size_t> index(axes.size(), 0);
  for (std::size_t p = 0; p < total; ++p) {
    ExperimentConfig cfg = point_cfg;
    GridPoint point;
    for (std::size_t a = 0; a < axes.size(); ++a) {
      point.values.push_back(axes[a].values[index[a]]);
      set_field(cfg, axes[a].name, point.values.back());
    }
    point.summary = summarize(cfg, run_experiment(cfg, loaded, opts.run));
    if (result.points.empty() || point.summary.mean < result.best_point().summary.mean) result.best = result.points.size();
    result.points.push_back(std::move(point));

    // odometer increment, last axis fastest
    for (std::size_t a = axes.size(); a-- > 0;) {
      if (++index[a] < axes[a].values.size()) break;
      index[a] = 0;
    }
  }
  return result;
}

}  // namespace lossreg::harness
