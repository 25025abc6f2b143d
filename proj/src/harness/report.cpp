#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "lossreg/harness.hpp"

namespace lossreg::harness {

namespace {

constexpr const char* kCsvHeader = "dataset,method,alpha,sigma,rho,mean,std,runs,digest";

std::string csv_safe(std::string s) {
  for (auto& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double to_double(const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IoError(fmt::format("malformed number '{}' in report", s));
  }
}

}  // namespace

std::string format_number(double v) { return fmt::format("{}", v); }

ReportFormat parse_report_format(std::string_view s) {
  if (s == "csv") return ReportFormat::csv;
  if (s == "json") return ReportFormat::json;
  throw ConfigError(fmt::format("unknown report format '{}'", s));
}

std::string format_report(const std::vector<Summary>& summaries, ReportFormat format) {
  if (summaries.empty()) throw ContractError("a report needs at least one summary");
  if (format == ReportFormat::csv) {
    std::string out = fmt::format("{}\n", kCsvHeader);
    for (const auto& s : summaries)
      out += fmt::format("{},{},{},{},{},{},{},{},{}\n", csv_safe(s.dataset), csv_safe(s.method), format_number(s.alpha),
                         format_number(s.sigma), format_number(s.rho), format_number(s.mean), format_number(s.std),
                         s.runs, s.digest);
    return out;
  }
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& s : summaries) {
    nlohmann::ordered_json obj;
    obj["dataset"] = s.dataset;
    obj["method"] = s.method;
    obj["alpha"] = s.alpha;
    obj["sigma"] = s.sigma;
    obj["rho"] = s.rho;
    obj["mean"] = s.mean;
    obj["std"] = s.std;
    obj["runs"] = s.runs;
    obj["digest"] = s.digest;
    obj["metrics"] = s.metrics;
    arr.push_back(std::move(obj));
  }
  return arr.dump(2) + "\n";
}

void emit_report(const std::vector<Summary>& summaries, ReportFormat format, const std::filesystem::path& path) {
  const auto text = format_report(summaries, format);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot write report '{}'", path.string()));
  out << text;
  out.flush();
  if (!out) throw IoError(fmt::format("failed writing report '{}'", path.string()));
}

std::vector<Summary> read_report(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open report '{}'", path.string()));
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  const auto first = text.find_first_not_of(" \t\r\n");
  std::vector<Summary> out;

  if (first != std::string::npos && text[first] == '[') {
    nlohmann::json arr;
    try {
      arr = nlohmann::json::parse(text);
      for (const auto& obj : arr) {
        Summary s;
        s.dataset = obj.at("dataset").get<std::string>();
        s.method = obj.at("method").get<std::string>();
        s.alpha = obj.at("alpha").get<double>();
        s.sigma = obj.at("sigma").get<double>();
        s.rho = obj.at("rho").get<double>();
        s.mean = obj.at("mean").get<double>();
        s.std = obj.at("std").get<double>();
        s.runs = obj.at("runs").get<std::size_t>();
        s.digest = obj.at("digest").get<std::string>();
        s.metrics = obj.at("metrics").get<std::vector<double>>();
        out.push_back(std::move(s));
      }
    } catch (const nlohmann::json::exception& e) {
      throw IoError(fmt::format("malformed JSON report '{}': {}", path.string(), e.what()));
    }
    return out;
  }

  std::istringstream lines(text);
  std::string line;
  if (!std::getline(lines, line) || line != kCsvHeader)
    throw IoError(fmt::format("'{}' is not a report file", path.string()));
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 9) throw IoError(fmt::format("malformed report row in '{}'", path.string()));
    Summary s;
    s.dataset = f[0];
    s.method = f[1];
    s.alpha = to_double(f[2]);
    s.sigma = to_double(f[3]);
    s.rho = to_double(f[4]);
    s.mean = to_double(f[5]);
    s.std = to_double(f[6]);
    s.runs = static_cast<std::size_t>(to_double(f[7]));
    s.digest = f[8];
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace lossreg::harness
