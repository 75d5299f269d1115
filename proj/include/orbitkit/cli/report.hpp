#pragma once

#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "orbitkit/errors.hpp"
#include "orbitkit/format.hpp"
#include "orbitkit/space.hpp"

namespace orbitkit::cli {

inline constexpr std::string_view kReportFormat = "orbitkit-report/1";

struct ReportSection {
  std::string kind;
  std::string name;
  std::vector<std::pair<std::string, std::string>> entries;

  void put(std::string key, std::string value) { entries.emplace_back(std::move(key), std::move(value)); }
  void put(std::string key, double v) { put(std::move(key), format_double(v)); }
  void put(std::string key, const Vector& v) { put(std::move(key), format_vector(v)); }
  void put(std::string key, bool b) { put(std::move(key), std::string(b ? "true" : "false")); }
  void put(std::string key, const char* s) { put(std::move(key), std::string(s)); }
  template <class Int>
    requires std::is_integral_v<Int>
  void put(std::string key, Int i) {
    put(std::move(key), std::to_string(i));
  }

  const std::string* find(std::string_view key) const {
    for (const auto& [k, v] : entries) {
      if (k == key) return &v;
    }
    return nullptr;
  }
};

/// Structured text mirroring the scenario grammar. The timestamp line is the
/// only part that changes between identical runs.
struct Report {
  std::string timestamp;
  ReportSection header;
  std::vector<ReportSection> sections;

  ReportSection& add(std::string kind, std::string name = {}) {
    sections.push_back({std::move(kind), std::move(name), {}});
    return sections.back();
  }

  std::string emit() const {
    std::ostringstream out;
    out << "format = " << kReportFormat << "\n";
    out << "timestamp = " << timestamp << "\n";
    for (const auto& [k, v] : header.entries) out << k << " = " << v << "\n";
    for (const auto& s : sections) {
      out << "\n[" << s.kind << (s.name.empty() ? "" : " " + s.name) << "]\n";
      for (const auto& [k, v] : s.entries) out << k << " = " << v << "\n";
    }
    return out.str();
  }
};

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Report text with the timestamp line removed, for comparisons.
inline std::string without_timestamp(std::string_view text) {
  std::string out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const auto line = text.substr(pos, nl - pos);
    if (!line.starts_with("timestamp = ")) {
      out += line;
      out += '\n';
    }
    pos = nl + 1;
  }
  return out;
}

/// Delimited point cloud: header row, then one point per row at 17 digits.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {}

  void row(const std::vector<double>& numbers, const std::vector<std::string>& extra = {}) {
    std::string line;
    for (std::size_t i = 0; i < numbers.size(); ++i) line += (i ? "," : "") + format_double17(numbers[i]);
    for (const auto& e : extra) line += "," + e;
    rows_.push_back(std::move(line));
  }
  std::size_t rows() const { return rows_.size(); }

  std::string text() const {
    std::string out;
    for (std::size_t i = 0; i < header_.size(); ++i) out += (i ? "," : "") + header_[i];
    out += "\n";
    for (const auto& r : rows_) out += r + "\n";
    return out;
  }

  void write(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorKind::InvalidArgument, "cannot write '" + path + "'");
    f << text();
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::string> rows_;
};

inline std::vector<std::string> coordinate_header(Eigen::Index n, std::vector<std::string> prefix = {}) {
  for (Eigen::Index i = 0; i < n; ++i) prefix.push_back("x" + std::to_string(i));
  return prefix;
}

inline std::vector<double> as_row(const Vector& v, std::vector<double> prefix = {}) {
  for (Eigen::Index i = 0; i < v.size(); ++i) prefix.push_back(v(i));
  return prefix;
}

}  // namespace orbitkit::cli
