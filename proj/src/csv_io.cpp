#include "sps/csv_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace sps {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    std::size_t start = 0;
    while (start < cell.size() && cell[start] == ' ') ++start;
    out.push_back(cell.substr(start));
  }
  return out;
}

double parse_number(const std::string& s, const std::string& path, std::size_t line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) {
    throw std::invalid_argument(path + ":" + std::to_string(line) + ": not a number: '" + s + "'");
  }
  return v;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

Table read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  Table t;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto cells = split_line(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": expected " +
                                  std::to_string(t.header.size()) + " columns");
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(parse_number(c, path, line_no));
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty()) throw std::invalid_argument(path + ": missing header");
  return t;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

void write_header(std::ostream& out, const char* prefix, Index count, bool trailing_comma) {
  for (Index k = 0; k < count; ++k) {
    out << prefix << (k + 1);
    if (k + 1 < count || trailing_comma) out << ',';
  }
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_dataset_csv(const SpatialDataset& ds, const std::string& path) {
  auto out = open_out(path);
  const Index d = ds.locs.dim();
  const Index N = ds.realizations();
  write_header(out, "x", d, N > 0);
  write_header(out, "y", N, false);
  out << '\n';
  for (Index i = 0; i < ds.size(); ++i) {
    for (Index k = 0; k < d; ++k) out << (k ? "," : "") << format_double(ds.locs.coords()(i, k));
    for (Index r = 0; r < N; ++r) out << ',' << format_double(ds.Y(i, r));
    out << '\n';
  }
}

SpatialDataset read_dataset_csv(const std::string& path) {
  const Table t = read_table(path);
  Index d = 0;
  Index N = 0;
  for (const auto& h : t.header) {
    if (!h.empty() && h[0] == 'x' && N == 0) {
      ++d;
    } else if (!h.empty() && h[0] == 'y') {
      ++N;
    } else {
      throw std::invalid_argument(path + ": unexpected column '" + h + "'");
    }
  }
  if (d == 0 || N == 0) throw std::invalid_argument(path + ": need x and y columns");
  if (t.rows.empty()) throw std::invalid_argument(path + ": no data rows");
  const auto n = static_cast<Index>(t.rows.size());
  Points X(n, d);
  Eigen::MatrixXd Y(n, N);
  for (Index i = 0; i < n; ++i) {
    const auto& row = t.rows[static_cast<std::size_t>(i)];
    for (Index k = 0; k < d; ++k) X(i, k) = row[static_cast<std::size_t>(k)];
    for (Index r = 0; r < N; ++r) Y(i, r) = row[static_cast<std::size_t>(d + r)];
  }
  return SpatialDataset(LocationSet(std::move(X)), std::move(Y));
}

Points read_query_csv(const std::string& path) {
  const Table t = read_table(path);
  for (const auto& h : t.header) {
    if (h.empty() || h[0] != 'x') throw std::invalid_argument(path + ": unexpected column '" + h + "'");
  }
  Points Q(static_cast<Index>(t.rows.size()), static_cast<Index>(t.header.size()));
  for (Index i = 0; i < Q.rows(); ++i) {
    for (Index k = 0; k < Q.cols(); ++k) Q(i, k) = t.rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
  }
  return Q;
}

void write_query_csv(const Points& queries, const std::string& path) {
  auto out = open_out(path);
  write_header(out, "x", queries.cols(), false);
  out << '\n';
  for (Index i = 0; i < queries.rows(); ++i) {
    for (Index k = 0; k < queries.cols(); ++k) out << (k ? "," : "") << format_double(queries(i, k));
    out << '\n';
  }
}

void write_prediction_csv(const Points& queries, const PredictiveDistribution& pred, const std::string& path) {
  auto out = open_out(path);
  write_header(out, "x", queries.cols(), true);
  out << "mean,variance\n";
  for (Index i = 0; i < queries.rows(); ++i) {
    for (Index k = 0; k < queries.cols(); ++k) out << format_double(queries(i, k)) << ',';
    out << format_double(pred.mean[i]) << ',' << format_double(pred.variance[i]) << '\n';
  }
}

nlohmann::json params_to_json(const CovarianceParams& params) {
  nlohmann::json j;
  j["family"] = std::string(kernel_token(params.family.tag));
  j["theta_rho"] = std::vector<double>(params.theta_rho.data(), params.theta_rho.data() + params.theta_rho.size());
  j["theta_v"] = params.theta_v;
  j["theta_0"] = params.theta_0;
  return j;
}

CovarianceParams params_from_json(const nlohmann::json& j, Index dim) {
  CovarianceParams p;
  p.family = parse_kernel(j.at("family").get<std::string>(), dim);
  const auto rho = j.at("theta_rho").get<std::vector<double>>();
  p.theta_rho = Eigen::Map<const Eigen::VectorXd>(rho.data(), static_cast<Index>(rho.size()));
  p.theta_v = j.at("theta_v").get<double>();
  p.theta_0 = j.at("theta_0").get<double>();
  p.validate();
  return p;
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return nlohmann::json::parse(in);
}

void write_json(const nlohmann::json& j, const std::string& path) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

}  // namespace sps
