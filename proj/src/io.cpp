#include "semrd/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace semrd {

namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json parse_json(std::string_view text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string(what) + ": " + e.what());
  }
}

Matrix<double> json_matrix(const json& j, const char* what) {
  if (!j.is_array() || j.empty()) {
    throw ParseError(std::string(what) + ": expected a non-empty array of rows");
  }
  const std::size_t cols = j.front().is_array() ? j.front().size() : 0;
  if (cols == 0) throw ParseError(std::string(what) + ": rows must be non-empty arrays");
  Matrix<double> m(static_cast<Index>(j.size()), static_cast<Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    const json& row = j[r];
    if (!row.is_array() || row.size() != cols) {
      throw ParseError(std::string(what) + ": ragged rows");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      if (!row[c].is_number()) throw ParseError(std::string(what) + ": non-numeric entry");
      m(static_cast<Index>(r), static_cast<Index>(c)) = row[c].get<double>();
    }
  }
  return m;
}

std::vector<std::string> json_labels(const json& j, const char* key) {
  std::vector<std::string> out;
  if (!j.contains(key)) return out;
  const json& arr = j.at(key);
  if (!arr.is_array()) throw ParseError(std::string(key) + " must be an array");
  for (const json& v : arr) {
    if (v.is_string()) {
      out.push_back(v.get<std::string>());
    } else if (v.is_number()) {
      out.push_back(v.dump());
    } else {
      throw ParseError(std::string(key) + ": labels must be strings or numbers");
    }
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

constexpr std::string_view kMatrixPrefix = "matrix:";

}  // namespace

JointSource parse_source(std::string_view json_text) {
  const json j = parse_json(json_text, "source");
  if (!j.is_object() || !j.contains("joint")) throw ParseError("source: missing \"joint\"");
  return JointSource(json_matrix(j.at("joint"), "source joint"), json_labels(j, "s_labels"),
                     json_labels(j, "x_labels"));
}

JointSource load_source(const std::string& path) { return parse_source(read_file(path)); }

Channel parse_channel(std::string_view json_text) {
  const json j = parse_json(json_text, "channel");
  if (!j.is_object() || !j.contains("rows")) throw ParseError("channel: missing \"rows\"");
  return Channel(json_matrix(j.at("rows"), "channel rows"));
}

Channel load_channel(const std::string& path) { return parse_channel(read_file(path)); }

Matrix<double> parse_csv_matrix(std::string_view text) {
  std::vector<std::vector<double>> rows;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    start = end + 1;
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    std::vector<double> row;
    std::size_t pos = 0;
    while (true) {
      const std::size_t comma = line.find(',', pos);
      const std::string_view cell = line.substr(pos, comma - pos);
      double v;
      if (!parse_double(cell, v)) {
        throw ParseError("csv matrix: bad number '" + std::string(cell) + "'");
      }
      row.push_back(v);
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError("csv matrix: ragged rows");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("csv matrix: no rows");
  Matrix<double> m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      m(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
    }
  }
  return m;
}

Matrix<double> load_csv_matrix(const std::string& path) {
  return parse_csv_matrix(read_file(path));
}

SemanticMeasure semantic_from_name(const std::string& name) {
  if (name == "tv") return SemanticMeasure::total_variation();
  if (name == "kl") return SemanticMeasure::kl_divergence();
  if (name == "chi2") return SemanticMeasure::chi_squared();
  if (name.starts_with(kMatrixPrefix)) {
    const Matrix<double> samples = load_csv_matrix(name.substr(kMatrixPrefix.size()));
    if (samples.cols() != 2) {
      throw ParseError("semantic matrix: expected two columns (t, f(t))");
    }
    std::vector<double> t(samples.rows()), f(samples.rows());
    for (Index i = 0; i < samples.rows(); ++i) {
      t[i] = samples(i, 0);
      f[i] = samples(i, 1);
    }
    return SemanticMeasure::generic_f(name, std::move(t), std::move(f));
  }
  throw ParseError("unknown semantic measure '" + name + "'");
}

ObservationMeasure observation_from_name(const std::string& name,
                                         const JointSource& source, Index output_size) {
  if (name == "hamming") return ObservationMeasure::hamming();
  if (name == "mse") {
    std::vector<double> xv = numeric_labels(source.x_labels());
    std::vector<double> yv;
    if (output_size == source.observation_size()) yv = xv;
    return ObservationMeasure::squared_error(std::move(xv), std::move(yv));
  }
  if (name.starts_with(kMatrixPrefix)) {
    Matrix<double> costs = load_csv_matrix(name.substr(kMatrixPrefix.size()));
    if (costs.rows() != source.observation_size() || costs.cols() != output_size) {
      throw DimensionMismatch("symbolic matrix: expected " +
                              std::to_string(source.observation_size()) + " x " +
                              std::to_string(output_size) + " costs");
    }
    return ObservationMeasure::custom(std::move(costs), name);
  }
  throw ParseError("unknown symbolic measure '" + name + "'");
}

std::vector<double> parse_grid(const std::string& spec) {
  const std::size_t c1 = spec.find(':');
  const std::size_t c2 = c1 == std::string::npos ? c1 : spec.find(':', c1 + 1);
  if (c2 == std::string::npos || spec.find(':', c2 + 1) != std::string::npos) {
    throw ParseError("grid '" + spec + "': expected a:b:n");
  }
  double a, b, n;
  if (!parse_double(std::string_view(spec).substr(0, c1), a) ||
      !parse_double(std::string_view(spec).substr(c1 + 1, c2 - c1 - 1), b) ||
      !parse_double(std::string_view(spec).substr(c2 + 1), n)) {
    throw ParseError("grid '" + spec + "': expected a:b:n");
  }
  if (!std::isfinite(a) || !std::isfinite(b) || n < 0 || n != std::floor(n)) {
    throw ParseError("grid '" + spec + "': n must be a nonnegative integer");
  }
  if (n == 0) throw ParseError("grid '" + spec + "' is empty");
  const auto count = static_cast<std::size_t>(n);
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = count == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1);
  }
  if (count > 1) out.back() = b;
  return out;
}

std::vector<double> numeric_labels(const std::vector<std::string>& labels) {
  std::vector<double> out;
  for (const std::string& l : labels) {
    double v;
    if (!parse_double(l, v)) return {};
    out.push_back(v);
  }
  return out;
}

}  // namespace semrd
