#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>

#include <fmt/format.h>

#include "lossreg/config.hpp"
#include "lossreg/harness.hpp"

namespace lossreg::harness {

namespace {

// Sub-streams of a run seed. Each consumer owns one so that a regularizer
// drawing (or not drawing) random numbers never shifts initialization,
// batch order or dropout masks.
enum Stream : std::uint64_t { kInit = 1, kBatchOrder = 2, kDropout = 3, kDisturb = 4 };

std::filesystem::path resolve(const std::filesystem::path& base, const std::filesystem::path& p) {
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return base / p;
}

double evaluate(const nn::Network<double>& net, const data::Dataset& ds) {
  const MatrixXd out = nn::predict(net, ds.features);
  if (ds.task == data::Task::regression) {
    if (ds.size() == 0) return 0.0;
    return std::sqrt((out.col(0) - ds.values).squaredNorm() / static_cast<double>(ds.size()));
  }
  std::size_t wrong = 0;
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    Eigen::Index best = 0;
    out.row(r).maxCoeff(&best);
    if (static_cast<int>(best) != ds.labels[static_cast<std::size_t>(r)]) ++wrong;
  }
  return 100.0 * static_cast<double>(wrong) / static_cast<double>(ds.size());
}

MatrixXd gather_rows(const MatrixXd& x, std::span<const std::size_t> rows) {
  MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

}  // namespace

data::Task DatasetSource::resolved_task() const {
  switch (kind) {
    case DatasetKind::csv: return task;
    case DatasetKind::idx:
    case DatasetKind::synthetic_classification: return data::Task::classification;
    case DatasetKind::synthetic_regression: return data::Task::regression;
  }
  return task;
}

std::string DatasetSource::display_name() const {
  if (!name.empty()) return name;
  switch (kind) {
    case DatasetKind::csv: return path.stem().string();
    case DatasetKind::idx: return images.stem().string();
    case DatasetKind::synthetic_regression: return "synthetic_regression";
    case DatasetKind::synthetic_classification: return "synthetic_classification";
  }
  return "dataset";
}

ExperimentConfig ExperimentConfig::defaults_for(data::Task task) {
  ExperimentConfig cfg;
  if (task == data::Task::regression) {
    cfg.network.hidden = {64, 64};
    cfg.optimizer.kind = nn::OptimizerKind::adam;
    cfg.optimizer.schedule = LrSchedule::constant;
    cfg.epochs = 200;
    cfg.batch_size = 32;
    cfg.runs = 20;
    cfg.train_fraction = 0.5;
  } else {
    cfg.network.hidden = {256, 128};
    cfg.optimizer.kind = nn::OptimizerKind::sgd_momentum;
    cfg.optimizer.schedule = LrSchedule::step_decay;
    cfg.epochs = 100;
    cfg.batch_size = 64;
    cfg.runs = 5;
    cfg.train_fraction = 0.86;
  }
  cfg.optimizer.lr = 1e-3;
  cfg.dataset.task = task;
  cfg.dataset.kind = task == data::Task::regression ? DatasetKind::synthetic_regression
                                                    : DatasetKind::synthetic_classification;
  return cfg;
}

void ExperimentConfig::validate() const {
  const auto fail = [](const std::string& msg) { throw config::ConstraintError(msg); };
  if (runs < 1) fail("protocol.runs must be >= 1");
  if (epochs < 1) fail("protocol.epochs must be >= 1");
  if (batch_size < 1) fail("protocol.batch_size must be >= 1");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) fail("protocol.train_fraction must lie in (0, 1)");
  for (auto h : network.hidden)
    if (h < 1) fail("network.hidden widths must be >= 1");
  if (!(network.dropout_rate >= 0.0 && network.dropout_rate < 1.0)) fail("network.dropout_rate must lie in [0, 1)");
  if (!(network.l2_lambda >= 0.0)) fail("network.l2_lambda must be >= 0");
  if (!(optimizer.lr > 0.0)) fail("optimizer.lr must be > 0");
  if (!(optimizer.momentum >= 0.0 && optimizer.momentum < 1.0)) fail("optimizer.momentum must lie in [0, 1)");
  try {
    regularizer.validate();
  } catch (const DomainError& e) {
    fail(fmt::format("regularizer: {}", e.what()));
  }
  if (regularizer.schedule == disturb::SigmaSchedule::cosine_anneal && epochs < 2)
    fail("cosine annealing needs at least 2 epochs");

  const auto task = dataset.resolved_task();
  if (task == data::Task::regression && regularizer.for_classification())
    throw ConfigError(fmt::format("regularizer '{}' requires a cross-entropy (classification) network, dataset is regression",
                                  disturb::to_string(regularizer.method)));
  if (task == data::Task::classification && regularizer.for_regression())
    throw ConfigError(fmt::format("regularizer '{}' requires an mse (regression) network, dataset is classification",
                                  disturb::to_string(regularizer.method)));

  switch (dataset.kind) {
    case DatasetKind::csv:
      if (dataset.path.empty()) fail("dataset.path is required for csv datasets");
      if (dataset.target_column.empty()) fail("dataset.target_column is required for csv datasets");
      break;
    case DatasetKind::idx:
      if (dataset.images.empty() || dataset.labels.empty()) fail("dataset.images and dataset.labels are required");
      if (dataset.test_images.empty() != dataset.test_labels.empty())
        fail("dataset.test_images and dataset.test_labels go together");
      break;
    case DatasetKind::synthetic_regression:
      if (dataset.informative > dataset.features) fail("dataset.informative exceeds dataset.features");
      if (dataset.samples < 2 || dataset.features < 1) fail("synthetic datasets need >= 2 samples and >= 1 feature");
      break;
    case DatasetKind::synthetic_classification:
      if (dataset.classes < 2) fail("dataset.classes must be >= 2");
      if (dataset.samples < 2 || dataset.features < 1) fail("synthetic datasets need >= 2 samples and >= 1 feature");
      break;
  }
}

std::string ExperimentConfig::method_label() const {
  if (!label.empty()) return label;
  using disturb::Method;
  std::string base;
  switch (regularizer.method) {
    case Method::none: base = ""; break;
    case Method::disturb_label: base = "DL"; break;
    case Method::directional_disturb_label: base = "DDL"; break;
    case Method::disturb_value:
    case Method::disturb_value_error:
      base = "DV";
      if (regularizer.noise == disturb::NoiseKind::laplacian) base += "-lapl";
      if (regularizer.schedule == disturb::SigmaSchedule::cosine_anneal) base += "-anneal";
      if (regularizer.method == Method::disturb_value_error) base += "+DE";
      break;
    case Method::disturb_error: base = "DE"; break;
  }
  auto add = [&](const char* part) { base += base.empty() ? part : fmt::format("+{}", part); };
  if (network.dropout_rate > 0.0) add("dropout");
  if (network.l2_lambda > 0.0) add("L2");
  return base.empty() ? "none" : base;
}

LoadedData load_data(const DatasetSource& source) {
  LoadedData out;
  switch (source.kind) {
    case DatasetKind::csv:
      out.pool = data::load_csv(resolve(source.base_dir, source.path), source.target_column, source.task);
      break;
    case DatasetKind::idx:
      out.pool = data::load_idx(resolve(source.base_dir, source.images), resolve(source.base_dir, source.labels));
      if (!source.test_images.empty())
        out.fixed_test =
            data::load_idx(resolve(source.base_dir, source.test_images), resolve(source.base_dir, source.test_labels));
      break;
    case DatasetKind::synthetic_regression:
      out.pool = data::make_synthetic_regression(source.samples, source.features, source.informative,
                                                 source.noise_std, source.data_seed);
      break;
    case DatasetKind::synthetic_classification:
      out.pool = data::make_synthetic_classification(source.samples, source.classes, source.features,
                                                     source.separation, source.data_seed);
      break;
  }
  if (source.limit > 0 && source.limit < out.pool.size()) {
    std::vector<std::size_t> rows(source.limit);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    out.pool = out.pool.subset(rows);
  }
  out.pool.name = source.display_name();
  if (out.fixed_test) {
    out.fixed_test->name = out.pool.name;
    if (out.fixed_test->feature_count() != out.pool.feature_count())
      throw data::CountMismatchError("training and test files have different feature counts");
    out.fixed_test->num_classes = out.pool.num_classes = std::max(out.pool.num_classes, out.fixed_test->num_classes);
  }
  return out;
}

RunReport run_single(const ExperimentConfig& cfg, const LoadedData& loaded, std::uint64_t seed,
                     const std::string& digest, const EpochObserver& observer) {
  const auto started = std::chrono::steady_clock::now();

  data::Dataset train;
  data::Dataset test;
  if (loaded.fixed_test) {
    train = loaded.pool;
    test = *loaded.fixed_test;
  } else {
    std::tie(train, test) = data::split_shuffle(loaded.pool, cfg.train_fraction, seed);
  }
  // IDX pixels are already in [0, 1]; tabular features get MinMax scaling.
  data::scale_split(train, test, cfg.dataset.kind != DatasetKind::idx);

  const bool classification = train.task == data::Task::classification;
  nn::NetworkSpec spec;
  spec.input_dim = train.feature_count();
  spec.hidden_dims = cfg.network.hidden;
  spec.output_dim = classification ? static_cast<std::size_t>(train.num_classes) : 1;
  spec.loss = classification ? nn::LossKind::cross_entropy : nn::LossKind::mse;
  spec.dropout_rate = cfg.network.dropout_rate;
  spec.l2_lambda = cfg.network.l2_lambda;

  Rng init_rng = make_stream(seed, kInit);
  Rng order_rng = make_stream(seed, kBatchOrder);
  Rng dropout_rng = make_stream(seed, kDropout);
  Rng disturb_rng = make_stream(seed, kDisturb);

  auto net = nn::Network<double>::initialized(spec, init_rng);
  nn::OptimizerState<double> opt =
      cfg.optimizer.kind == nn::OptimizerKind::adam
          ? nn::OptimizerState<double>::adam(cfg.optimizer.lr, cfg.optimizer.beta1, cfg.optimizer.beta2, cfg.optimizer.eps)
          : nn::OptimizerState<double>::sgd(cfg.optimizer.lr, cfg.optimizer.momentum);

  using disturb::Method;
  const auto& reg = cfg.regularizer;
  const bool label_noise = reg.method == Method::disturb_label;
  const bool directional = reg.method == Method::directional_disturb_label;
  const bool value_noise = reg.method == Method::disturb_value || reg.method == Method::disturb_value_error;
  const bool error_noise = reg.method == Method::disturb_error || reg.method == Method::disturb_value_error;

  RunReport report;
  report.seed = seed;
  report.digest = digest;
  report.train_curve.reserve(cfg.epochs);
  report.test_curve.reserve(cfg.epochs);
  report.disturbed_per_epoch.reserve(cfg.epochs);

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  disturb::DisturbTrace trace;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.optimizer.schedule == LrSchedule::step_decay) opt.learning_rate = nn::lr_at_epoch(cfg.optimizer.lr, epoch);
    std::shuffle(order.begin(), order.end(), order_rng);
    std::size_t disturbed = 0;

    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::span<const std::size_t> rows(order.data() + start, std::min(cfg.batch_size, order.size() - start));
      const MatrixXd x = gather_rows(train.features, rows);
      nn::Gradients<double> grads;
      if (classification) {
        LabelBatch labels = train.label_batch(rows);
        if (label_noise) {
          labels = disturb::disturb_labels(labels, reg.alpha_pct, disturb_rng, &trace);
          disturbed += trace.selected.size();
        }
        const auto cache = nn::forward(net, x, true, &dropout_rng);
        if (directional) {
          labels = disturb::directional_disturb_labels(labels, cache.output, reg, disturb_rng, &trace);
          disturbed += trace.selected.size();
        }
        grads = nn::backward(net, cache, nn::Targets<double>{std::move(labels)});
      } else {
        TargetBatch y = train.target_batch(rows);
        if (value_noise) {
          y = disturb::disturb_values(y, reg, epoch, cfg.epochs, disturb_rng, &trace);
          disturbed += trace.selected.size();
        }
        const auto cache = nn::forward(net, x, true, &dropout_rng);
        if (error_noise) {
          y = disturb::disturb_errors(y, cache.output.col(0), reg, disturb_rng, &trace);
          disturbed += trace.selected.size();
        }
        grads = nn::backward(net, cache, nn::Targets<double>{std::move(y)});
      }
      nn::optimizer_step(opt, net, grads);
    }

    report.disturbed_per_epoch.push_back(disturbed);
    report.train_curve.push_back(evaluate(net, train));
    report.test_curve.push_back(evaluate(net, test));
    if (observer) observer(epoch, net);
  }

  report.final_metric = report.test_curve.back();
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

std::vector<RunReport> run_experiment(const ExperimentConfig& cfg, const LoadedData& data, RunOptions opts) {
  cfg.validate();
  const auto digest = config::config_digest(cfg);
  std::vector<RunReport> reports(cfg.runs);
  std::vector<std::exception_ptr> errors(cfg.runs);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t r = next++; r < cfg.runs; r = next++) {
      try {
        reports[r] = run_single(cfg, data, cfg.base_seed + r, digest);
      } catch (...) {
        errors[r] = std::current_exception();
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(opts.threads, static_cast<unsigned>(cfg.runs)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return reports;
}

std::vector<RunReport> run_experiment(const ExperimentConfig& cfg, RunOptions opts) {
  cfg.validate();
  return run_experiment(cfg, load_data(cfg.dataset), opts);
}

Summary aggregate(const std::vector<RunReport>& reports) {
  if (reports.empty()) throw ContractError("aggregate needs at least one run report");
  Summary s;
  s.digest = reports.front().digest;
  for (const auto& r : reports) {
    if (r.digest != s.digest) throw ContractError("cannot aggregate run reports from different configs");
    s.metrics.push_back(r.final_metric);
  }
  s.runs = s.metrics.size();
  const double n = static_cast<double>(s.runs);
  s.mean = std::accumulate(s.metrics.begin(), s.metrics.end(), 0.0) / n;
  if (s.runs > 1) {
    double ss = 0.0;
    for (double m : s.metrics) ss += (m - s.mean) * (m - s.mean);
    s.std = std::sqrt(ss / (n - 1.0));
  }
  return s;
}

Summary summarize(const ExperimentConfig& cfg, const std::vector<RunReport>& reports) {
  Summary s = aggregate(reports);
  s.dataset = cfg.dataset.display_name();
  s.method = cfg.method_label();
  s.alpha = cfg.regularizer.alpha_pct;
  s.sigma = cfg.regularizer.sigma;
  s.rho = cfg.regularizer.rho;
  return s;
}

}  // namespace lossreg::harness
