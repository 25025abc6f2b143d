#include "lossreg/cli.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "lossreg/config.hpp"

namespace lossreg::cli {

using harness::Summary;

namespace {

void print_summary(std::ostream& out, const Summary& s) {
  out << fmt::format("{:<24} {:<20} {}  ({} runs)  digest {}\n", s.dataset, s.method, format_mean_std(s.mean, s.std),
                     s.runs, s.digest);
}

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

}  // namespace

std::string format_mean_std(double mean, double std) { return fmt::format("{:.5f} ±{:.5f}", mean, std); }

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) != nullptr) return kConfigError;
  return kRuntimeError;
}

harness::GridAxis parse_grid_axis(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError(fmt::format("grid axis '{}' is not name=v1,v2,...", text));
  harness::GridAxis axis{text.substr(0, eq), {}};
  std::stringstream ss(text.substr(eq + 1));
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      axis.values.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError(fmt::format("grid value '{}' for '{}' is not a number", item, axis.name));
    }
  }
  if (axis.values.empty()) throw ConfigError(fmt::format("grid axis '{}' has no values", axis.name));
  return axis;
}

int cmd_train(const harness::ExperimentConfig& cfg, const TrainOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto reports = harness::run_experiment(cfg, harness::RunOptions{opts.threads});
    const auto summary = harness::summarize(cfg, reports);
    if (opts.verbosity > 0)
      for (const auto& r : reports)
        out << fmt::format("  run seed={} test={} train={} ({:.2f}s)\n", r.seed, harness::format_number(r.final_metric),
                           harness::format_number(r.train_curve.back()), r.wall_seconds);
    print_summary(out, summary);
    if (!opts.out.empty()) {
      harness::emit_report({summary}, opts.format, opts.out);
      out << "report written to " << opts.out.string() << "\n";
    }
    return static_cast<int>(kOk);
  });
}

int cmd_grid(const harness::ExperimentConfig& cfg, const std::vector<harness::GridAxis>& axes,
             const GridCommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (axes.empty()) throw ConfigError("grid needs at least one --grid axis");
    auto grid_opts = opts.grid;
    grid_opts.run.threads = opts.train.threads;
    const auto result = harness::grid_search(cfg, axes, grid_opts);

    std::string header;
    for (const auto& a : axes) header += fmt::format("{:>22} ", a.name);
    out << header << fmt::format("{:>24}  digest\n", "mean ±std");
    std::vector<Summary> summaries;
    for (std::size_t i = 0; i < result.points.size(); ++i) {
      const auto& p = result.points[i];
      std::string row;
      for (double v : p.values) row += fmt::format("{:>22} ", harness::format_number(v));
      out << row << fmt::format("{:>24}  {}{}\n", format_mean_std(p.summary.mean, p.summary.std), p.summary.digest,
                                i == result.best ? "  <- best" : "");
      summaries.push_back(p.summary);
    }
    out << "best:";
    for (std::size_t a = 0; a < axes.size(); ++a)
      out << fmt::format(" {}={}", axes[a].name, harness::format_number(result.best_point().values[a]));
    out << "\n";

    if (opts.final_runs > 0) {
      auto final_cfg = cfg;
      for (std::size_t a = 0; a < axes.size(); ++a)
        harness::set_field(final_cfg, axes[a].name, result.best_point().values[a]);
      final_cfg.runs = opts.final_runs;
      const auto summary =
          harness::summarize(final_cfg, harness::run_experiment(final_cfg, harness::RunOptions{opts.train.threads}));
      out << "final: ";
      print_summary(out, summary);
      summaries.push_back(summary);
    }
    if (!opts.train.out.empty()) {
      harness::emit_report(summaries, opts.train.format, opts.train.out);
      out << "report written to " << opts.train.out.string() << "\n";
    }
    return static_cast<int>(kOk);
  });
}

int cmd_report(const std::vector<std::filesystem::path>& inputs, const TrainOptions& opts, std::ostream& out,
               std::ostream& err) {
  return guarded(err, [&] {
    if (inputs.empty()) throw ConfigError("report needs at least one input file");
    std::vector<Summary> merged;
    for (const auto& path : inputs) {
      auto part = harness::read_report(path);
      merged.insert(merged.end(), part.begin(), part.end());
    }

    // methods as rows, datasets as columns, in order of first appearance
    std::vector<std::string> methods;
    std::vector<std::string> datasets;
    std::map<std::pair<std::string, std::string>, const Summary*> cells;
    for (const auto& s : merged) {
      if (std::find(methods.begin(), methods.end(), s.method) == methods.end()) methods.push_back(s.method);
      if (std::find(datasets.begin(), datasets.end(), s.dataset) == datasets.end()) datasets.push_back(s.dataset);
      cells[{s.method, s.dataset}] = &s;
    }
    out << fmt::format("{:<20}", "method");
    for (const auto& d : datasets) out << fmt::format(" {:>22}", d);
    out << "\n";
    for (const auto& m : methods) {
      out << fmt::format("{:<20}", m);
      for (const auto& d : datasets) {
        const auto it = cells.find({m, d});
        out << fmt::format(" {:>22}", it == cells.end() ? "-" : format_mean_std(it->second->mean, it->second->std));
      }
      out << "\n";
    }
    for (const auto& s : merged) out << fmt::format("digest {} {} {}\n", s.digest, s.method, s.dataset);
    if (!opts.out.empty()) {
      harness::emit_report(merged, opts.format, opts.out);
      out << "merged report written to " << opts.out.string() << "\n";
    }
    return static_cast<int>(kOk);
  });
}

}  // namespace lossreg::cli
