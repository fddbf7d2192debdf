#include "blockgibbs/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace blockgibbs {

std::string format_double(double value) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, result.ptr);
}

namespace {

bool parse_double(const std::string& token, double& out) {
  const char* begin = token.data();
  const char* end = begin + token.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end > begin && (end[-1] == ' ' || end[-1] == '\t' || end[-1] == '\r')) --end;
  const auto result = std::from_chars(begin, end, out);
  return result.ec == std::errc() && result.ptr == end && begin != end;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> tokens;
  std::stringstream ss(line);
  std::string token;
  while (std::getline(ss, token, ',')) tokens.push_back(token);
  return tokens;
}

}  // namespace

Dataset load_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("load_dataset", "cannot open " + path);
  }
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto tokens = split_csv_line(line);
    std::vector<double> row(tokens.size());
    bool numeric = true;
    for (std::size_t c = 0; c < tokens.size(); ++c) {
      if (!parse_double(tokens[c], row[c])) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (first) {
        first = false;
        continue;  // header row
      }
      throw ConfigError("load_dataset", "non-numeric value in " + path);
    }
    first = false;
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ConfigError("load_dataset", "inconsistent column count in " + path);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) {
    throw ConfigError("load_dataset", "no data rows in " + path);
  }
  Eigen::MatrixXd y(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      y(r, c) = rows[r][c];
    }
  }
  return Dataset(std::move(y));
}

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path);
  if (!out) {
    throw ConfigError("write_csv", "cannot open " + path + " for writing");
  }
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c > 0) out << ',';
      out << format_double(m(r, c));
    }
    out << '\n';
  }
}

void write_labels(const std::string& path, const std::vector<int>& zero_based_labels) {
  std::ofstream out(path);
  if (!out) {
    throw ConfigError("write_labels", "cannot open " + path + " for writing");
  }
  for (int label : zero_based_labels) {
    out << (label + 1) << '\n';
  }
}

std::vector<int> load_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("load_labels", "cannot open " + path);
  }
  std::vector<int> labels;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    labels.push_back(std::stoi(line) - 1);
  }
  return labels;
}

}  // namespace blockgibbs
