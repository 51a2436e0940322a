#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "turtle/data.hpp"
#include "turtle/densities.hpp"

namespace turtle {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_double(std::string s, double* out) {
  // tolerate surrounding whitespace and a trailing CR
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t'))
    s.pop_back();
  std::size_t start = s.find_first_not_of(" \t");
  if (start == std::string::npos) return false;
  const char* b = s.data() + start;
  const char* e = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(b, e, *out);
  return ec == std::errc() && ptr == e;
}

std::string format_digits(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

} // namespace

Mat Standardizer::apply(const Mat& X) const {
  Mat out = X;
  for (int d = 0; d < X.cols(); ++d)
    out.col(d) = (X.col(d).array() - mean[d]) / sd[d];
  return out;
}

Mat Standardizer::invert(const Mat& X) const {
  Mat out = X;
  for (int d = 0; d < X.cols(); ++d)
    out.col(d) = X.col(d).array() * sd[d] + mean[d];
  return out;
}

Standardizer fit_standardizer(const Mat& X) {
  const int N = static_cast<int>(X.rows());
  Standardizer s;
  s.mean = X.colwise().mean().transpose();
  s.sd.resize(X.cols());
  for (int d = 0; d < X.cols(); ++d) {
    double ss = (X.col(d).array() - s.mean[d]).square().sum();
    double sd = N > 1 ? std::sqrt(ss / (N - 1)) : 0.0;
    s.sd[d] = sd > 0.0 ? sd : 1.0;
  }
  s.active = true;
  return s;
}

bool csv_has_header(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) return false;
  double v;
  for (const std::string& cell : split_line(line))
    if (!parse_double(cell, &v)) return true;
  return false;
}

LabeledDataset load_csv(const std::string& path, bool has_header,
                        std::optional<int> label_column, bool standardize) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::string line;
  int lineno = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 && has_header) continue;
    if (line.empty() || line == "\r") continue;
    std::vector<std::string> cells = split_line(line);
    if (width == 0) {
      width = cells.size();
      if (label_column && (*label_column < 0 || *label_column >= static_cast<int>(width)))
        throw ParseError("label column out of range");
    } else if (cells.size() != width) {
      throw ParseError("ragged row at line " + std::to_string(lineno) + " of " + path);
    }
    std::vector<double> feat;
    feat.reserve(width);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      double v;
      if (!parse_double(cells[c], &v))
        throw ParseError("non-numeric value '" + cells[c] + "' at line " +
                         std::to_string(lineno) + " of " + path);
      if (label_column && static_cast<int>(c) == *label_column) {
        labels.push_back(static_cast<int>(std::llround(v)));
      } else {
        feat.push_back(v);
      }
    }
    rows.push_back(std::move(feat));
  }
  if (rows.empty()) throw ParseError("no data rows in " + path);

  LabeledDataset ds;
  ds.name = path;
  ds.X.resize(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
  for (int i = 0; i < ds.X.rows(); ++i)
    for (int d = 0; d < ds.X.cols(); ++d) ds.X(i, d) = rows[i][d];
  ds.labels = std::move(labels);
  if (standardize) {
    ds.standardizer = fit_standardizer(ds.X);
    ds.X = ds.standardizer.apply(ds.X);
  }
  return ds;
}

void write_dataset_csv(const std::string& path, const LabeledDataset& ds) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  for (int d = 0; d < ds.X.cols(); ++d) out << "x" << (d + 1) << ",";
  out << "label\n";
  for (int i = 0; i < ds.X.rows(); ++i) {
    for (int d = 0; d < ds.X.cols(); ++d) out << format_digits(ds.X(i, d)) << ",";
    out << (ds.labels.empty() ? 0 : ds.labels[i]) << "\n";
  }
}

void write_labels_csv(const std::string& path, const std::vector<int>& labels) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  out << "row,label\n";
  for (std::size_t i = 0; i < labels.size(); ++i)
    out << i << "," << labels[i] << "\n";
}

void write_posteriors_csv(const std::string& path, const Mat& P) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  for (int k = 0; k < P.cols(); ++k) out << (k ? "," : "") << "p" << k;
  out << "\n";
  for (int i = 0; i < P.rows(); ++i) {
    for (int k = 0; k < P.cols(); ++k) out << (k ? "," : "") << format_digits(P(i, k));
    out << "\n";
  }
}

void write_trace_csv(const std::string& path, const ObjectiveTrace& trace) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  out << "phase,objective\n";
  for (const auto& [phase, value] : trace)
    out << phase << "," << format_digits(value) << "\n";
}

void write_model_json(const std::string& path, const FitResult& result,
                      const Standardizer& std_used) {
  using json = nlohmann::ordered_json;
  const Model& m = result.model;
  const int D = m.dim;

  Vec mean = Vec::Zero(D), sd = Vec::Ones(D);
  if (std_used.active) {
    mean = std_used.mean;
    sd = std_used.sd;
  }

  json j;
  j["schema_version"] = 1;
  j["k"] = m.order();
  j["dim"] = D;
  j["lambda1"] = result.lambda1;
  j["lambda2"] = result.lambda2;
  j["asw"] = result.asw;
  j["standardizer"] = {{"mean", std::vector<double>(mean.data(), mean.data() + D)},
                       {"sd", std::vector<double>(sd.data(), sd.data() + D)}};

  Vec tau = m.proportions();
  json clusters = json::array();
  for (int k = 0; k < m.order(); ++k) {
    const ClusterParams& c = m.clusters[k];
    // de-standardize: x_orig = x * sd + mean, covariances scaled by sd on
    // both sides
    Vec mu = c.gaussian.mu.cwiseProduct(sd) + mean;
    Vec a = c.uniform.a.cwiseProduct(sd) + mean;
    Vec b = c.uniform.b.cwiseProduct(sd) + mean;
    Mat cov = c.gaussian.covariance();
    for (int r = 0; r < D; ++r)
      for (int col = 0; col < D; ++col) cov(r, col) *= sd[r] * sd[col];

    json jc;
    jc["proportion"] = tau[k];
    jc["omega"] = c.omega;
    jc["mu"] = std::vector<double>(mu.data(), mu.data() + D);
    std::vector<std::vector<double>> covv(D, std::vector<double>(D));
    for (int r = 0; r < D; ++r)
      for (int col = 0; col < D; ++col) covv[r][col] = cov(r, col);
    jc["covariance"] = covv;
    jc["a"] = std::vector<double>(a.data(), a.data() + D);
    jc["b"] = std::vector<double>(b.data(), b.data() + D);
    clusters.push_back(jc);
  }
  j["clusters"] = clusters;

  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  out << j.dump(2) << "\n";
}

} // namespace turtle
