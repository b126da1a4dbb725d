#include "cpdcond/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

namespace cpdcond {

using nlohmann::json;

namespace {

json parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return json::parse(in);  // parse_error carries position diagnostics
}

void write_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

json factors_to_json(const Factors& factors) {
  const Shape shape = shape_of(factors);
  json j;
  j["dims"] = shape.dims;
  j["rank"] = shape.rank;
  json fs = json::array();
  for (const Eigen::MatrixXd& f : factors) {
    json cols = json::array();
    for (Eigen::Index i = 0; i < f.cols(); ++i) {
      json col = json::array();
      for (Eigen::Index row = 0; row < f.rows(); ++row) col.push_back(f(row, i));
      cols.push_back(std::move(col));
    }
    fs.push_back(std::move(cols));
  }
  j["factors"] = std::move(fs);
  return j;
}

Factors factors_from_json(const json& j) {
  const std::vector<int> dims = j.at("dims").get<std::vector<int>>();
  const int rank = j.at("rank").get<int>();
  const json& fs = j.at("factors");
  if (fs.size() != dims.size())
    throw ShapeError("decomposition file: factor count does not match dims");
  Factors factors;
  for (std::size_t k = 0; k < dims.size(); ++k) {
    const json& cols = fs[k];
    if (static_cast<int>(cols.size()) != rank)
      throw ShapeError("decomposition file: column count does not match rank");
    Eigen::MatrixXd f(dims[k], rank);
    for (int i = 0; i < rank; ++i) {
      const json& col = cols[i];
      if (static_cast<int>(col.size()) != dims[k])
        throw ShapeError("decomposition file: column length does not match dims");
      for (int row = 0; row < dims[k]; ++row) f(row, i) = col[row].get<double>();
    }
    factors.push_back(std::move(f));
  }
  return factors;
}

json finite_or_string(double x) {
  // JSON has no inf/nan literals; tag them as strings so reports stay parseable.
  if (std::isfinite(x)) return json(x);
  if (std::isnan(x)) return json("nan");
  return json(x > 0 ? "inf" : "-inf");
}

}  // namespace

Factors read_decomposition(const std::string& path) { return factors_from_json(parse_file(path)); }

void write_decomposition(const std::string& path, const Factors& factors) {
  write_file(path, factors_to_json(factors));
}

std::string decomposition_to_string(const Factors& factors) {
  return factors_to_json(factors).dump(2);
}

DenseTensor read_tensor(const std::string& path) {
  const json j = parse_file(path);
  DenseTensor t;
  t.dims = j.at("dims").get<std::vector<int>>();
  const json& values = j.at("values");
  if (static_cast<std::int64_t>(values.size()) != t.num_entries())
    throw ShapeError("tensor file: value count does not match dims");
  t.values.resize(t.num_entries());
  for (Eigen::Index i = 0; i < t.values.size(); ++i) t.values[i] = values[i].get<double>();
  return t;
}

void write_tensor(const std::string& path, const DenseTensor& t) {
  json j;
  j["dims"] = t.dims;
  json values = json::array();
  for (Eigen::Index i = 0; i < t.values.size(); ++i) values.push_back(t.values[i]);
  j["values"] = std::move(values);
  write_file(path, j);
}

std::string tensor_to_string(const DenseTensor& t) {
  json j;
  j["dims"] = t.dims;
  json values = json::array();
  for (Eigen::Index i = 0; i < t.values.size(); ++i) values.push_back(t.values[i]);
  j["values"] = std::move(values);
  return j.dump(2);
}

json report_to_json(const ConditionReport& report) {
  json j;
  j["sigma"] = std::vector<double>(report.sigma.data(), report.sigma.data() + report.sigma.size());
  j["sigma_n"] = report.sigma_n;
  j["kappa_abs"] = finite_or_string(report.kappa_abs);
  j["kappa_rel"] = finite_or_string(report.kappa_rel);
  j["tensor_norm"] = report.tensor_norm;
  j["param_norm"] = report.param_norm;
  j["accuracy_warning"] = report.accuracy_warning;
  j["subgeneric"] = report.subgeneric;
  return j;
}

json distance_to_json(const DistanceResult& result) {
  json j;
  j["value"] = result.value;
  j["permutation"] = result.minimizer.perm;
  json thetas = json::array();
  for (Eigen::Index i = 0; i < result.minimizer.thetas.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < result.minimizer.thetas.cols(); ++k)
      row.push_back(result.minimizer.thetas(i, k));
    thetas.push_back(std::move(row));
  }
  j["thetas"] = std::move(thetas);
  return j;
}

json isl_to_json(const IslResult& result) {
  json j;
  j["p_dot"] = std::vector<double>(result.p_dot.data.data(),
                                   result.p_dot.data.data() + result.p_dot.data.size());
  j["delta"] =
      std::vector<double>(result.delta.data(), result.delta.data() + result.delta.size());
  json gammas = json::array();
  for (Eigen::Index i = 0; i < result.gammas.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < result.gammas.cols(); ++k) row.push_back(result.gammas(i, k));
    gammas.push_back(std::move(row));
  }
  j["gammas"] = std::move(gammas);
  j["nabla_norms"] = result.nabla_norms;
  j["converged"] = result.converged;
  j["precondition_ok"] = result.precondition_ok;
  j["lambda"] = result.lambda;
  return j;
}

json kruskal_to_json(const KruskalInfo& info) {
  json j;
  j["k_ranks"] = info.k_ranks;
  j["bound"] = info.bound;
  j["satisfied"] = info.satisfied;
  return j;
}

namespace {

void append_number(std::string& line, double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  line += buf;
}

}  // namespace

void write_matrix_csv(std::ostream& os, const Eigen::MatrixXd& m) {
  std::string line;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    line.clear();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) line += ',';
      append_number(line, m(i, j));
    }
    os << line << "\n";
  }
}

void write_error_rows_csv(std::ostream& os, const std::vector<ErrorRow>& rows) {
  os << "s,backward,forward_proxy,orbit_forward,kappa,bound,warned,solver_failed\n";
  std::string line;
  for (const ErrorRow& row : rows) {
    line = std::to_string(row.s);
    for (double x : {row.backward, row.forward_proxy, row.orbit_forward, row.kappa, row.bound}) {
      line += ',';
      append_number(line, x);
    }
    line += row.warned ? ",1" : ",0";
    line += row.solver_failed ? ",1" : ",0";
    os << line << "\n";
  }
}

}  // namespace cpdcond
