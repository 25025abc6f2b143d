#include <charconv>
#include <cmath>
#include <optional>
#include <fstream>
#include <map>
#include <string_view>

#include <fmt/format.h>

#include "lossreg/data.hpp"

namespace lossreg::data {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma == std::string_view::npos ? comma : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

std::optional<double> parse_real(std::string_view cell) {
  if (cell.empty()) return std::nullopt;
  if (cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(value)) return std::nullopt;
  return value;
}

}  // namespace

Task parse_task(std::string_view s) {
  if (s == "classification") return Task::classification;
  if (s == "regression") return Task::regression;
  throw ConfigError(fmt::format("unknown task '{}'", s));
}

std::string_view to_string(Task t) { return t == Task::classification ? "classification" : "regression"; }

Dataset load_csv(const std::filesystem::path& path, const std::string& target_column, Task task) {
  std::ifstream in(path);
  if (!in) throw FileNotFoundError(fmt::format("cannot open CSV file '{}'", path.string()));

  std::string line;
  if (!std::getline(in, line)) throw EmptyDatasetError(fmt::format("'{}' has no header row", path.string()));
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = split_fields(line);
  std::size_t target_index = header.size();
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == target_column) target_index = i;
  if (target_index == header.size())
    throw MissingColumnError(fmt::format("column '{}' not found in '{}'", target_column, path.string()));

  Dataset ds;
  ds.name = path.stem().string();
  ds.task = task;
  for (std::size_t i = 0; i < header.size(); ++i)
    if (i != target_index) ds.feature_names.emplace_back(header[i]);

  const std::size_t p = header.size() - 1;
  std::vector<double> cells;
  std::vector<double> values;
  std::map<std::string, int, std::less<>> class_index;
  std::vector<double> row(p);
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    bool ok = fields.size() == header.size();
    for (std::size_t i = 0, f = 0; ok && i < fields.size(); ++i) {
      if (i == target_index) continue;
      const auto v = parse_real(fields[i]);
      if (!v) ok = false;
      else row[f++] = *v;
    }
    std::optional<double> target;
    if (ok) {
      if (task == Task::regression) {
        target = parse_real(fields[target_index]);
        ok = target.has_value();
      } else {
        ok = !fields[target_index].empty();
      }
    }
    if (!ok) {
      ++ds.dropped_rows;
      continue;
    }
    cells.insert(cells.end(), row.begin(), row.end());
    if (task == Task::regression) {
      values.push_back(*target);
    } else {
      const auto key = fields[target_index];
      auto it = class_index.find(key);
      if (it == class_index.end())
        it = class_index.emplace(std::string(key), static_cast<int>(class_index.size())).first;
      ds.labels.push_back(it->second);
    }
  }

  const std::size_t n = task == Task::regression ? values.size() : ds.labels.size();
  if (n == 0) throw EmptyDatasetError(fmt::format("'{}' has no usable rows", path.string()));
  ds.features = Eigen::Map<const MatrixXd>(cells.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  if (task == Task::regression)
    ds.values = Eigen::Map<const Vector<double>>(values.data(), static_cast<Eigen::Index>(n));
  else
    ds.num_classes = static_cast<int>(class_index.size());
  return ds;
}

}  // namespace lossreg::data
