#include "hdqlr/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "hdqlr/error.hpp"
#include "hdqlr/rng.hpp"

namespace hdqlr {

namespace {

std::string list_rows(const std::vector<std::size_t>& rows) {
  std::ostringstream out;
  const std::size_t shown = std::min<std::size_t>(rows.size(), 10);
  for (std::size_t i = 0; i < shown; ++i) out << (i ? ", " : "") << rows[i];
  if (rows.size() > shown) out << ", ... (" << rows.size() << " rows)";
  return out.str();
}

void require_binary(const Eigen::VectorXd& v, const char* what) {
  std::vector<std::size_t> bad;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v[i] != 0.0 && v[i] != 1.0) bad.push_back(static_cast<std::size_t>(i) + 1);
  }
  if (!bad.empty()) {
    throw ValidationError(std::string(what) + " must be 0/1; offending rows: " + list_rows(bad));
  }
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

bool is_missing(const std::string& cell) {
  return cell.empty() || cell == "NA" || cell == "na" || cell == "NaN" || cell == "nan";
}

double parse_cell(const std::string& cell, std::size_t row, const std::string& column) {
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  if (!cell.empty() && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw ParseError("non-numeric cell '" + cell + "' at row " + std::to_string(row) +
                         ", column '" + column + "'",
                     row, column);
  }
  return value;
}

}  // namespace

Dataset::Dataset(Eigen::VectorXd y, Eigen::VectorXd d, Eigen::VectorXd z, Eigen::MatrixXd x,
                 std::vector<std::string> column_names,
                 const std::vector<std::string>& intercept_columns)
    : y_(std::move(y)),
      d_(std::move(d)),
      z_(std::move(z)),
      x_(std::move(x)),
      column_names_(std::move(column_names)) {
  const auto n = y_.size();
  if (d_.size() != n || z_.size() != n || x_.rows() != n) {
    throw ValidationError("y, d, z and x must have the same number of rows");
  }
  if (x_.cols() < 1) throw ValidationError("at least one covariate is required");
  if (static_cast<std::size_t>(x_.cols()) != column_names_.size()) {
    throw ValidationError("column_names must name every covariate column");
  }
  if (!y_.allFinite() || !x_.allFinite()) throw ValidationError("non-finite entry in y or x");
  require_binary(d_, "treatment");
  require_binary(z_, "instrument");

  std::set<std::string> seen;
  for (const auto& name : column_names_) {
    if (!seen.insert(name).second) throw ValidationError("duplicate covariate name '" + name + "'");
  }
  for (Eigen::Index j = 0; j < x_.cols(); ++j) {
    const auto col = x_.col(j);
    const bool constant = (col.array() == col[0]).all();
    if (constant && std::find(intercept_columns.begin(), intercept_columns.end(),
                              column_names_[j]) == intercept_columns.end()) {
      throw ValidationError("covariate '" + column_names_[j] +
                            "' is constant; flag it as an intercept column or remove it");
    }
  }
}

Dataset load_csv(const std::filesystem::path& path, const ColumnRoles& roles,
                 LoadReport* report) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");

  std::string line;
  if (!std::getline(in, line)) throw SchemaError("'" + path.string() + "' has no header row");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  std::vector<std::string> header = split_csv_line(line);
  for (auto& h : header) h = trim(h);

  std::unordered_map<std::string, std::size_t> index_of;
  for (std::size_t j = 0; j < header.size(); ++j) index_of.emplace(header[j], j);
  auto column = [&](const std::string& name) {
    auto it = index_of.find(name);
    if (it == index_of.end()) throw SchemaError("missing column '" + name + "'");
    return it->second;
  };

  const std::size_t y_col = column(roles.outcome);
  const std::size_t d_col = column(roles.treatment);
  const std::size_t z_col = column(roles.instrument);
  std::vector<std::string> covariates = roles.covariates;
  if (covariates.empty()) {
    for (const auto& h : header) {
      if (h != roles.outcome && h != roles.treatment && h != roles.instrument) {
        covariates.push_back(h);
      }
    }
  }
  if (covariates.empty()) throw SchemaError("no covariate columns");
  std::vector<std::size_t> x_cols;
  for (const auto& name : covariates) x_cols.push_back(column(name));

  std::vector<double> ys, ds, zs, xs;
  LoadReport local;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    ++local.rows_read;
    std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw ParseError("row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                           " cells, header has " + std::to_string(header.size()),
                       row, "");
    }
    for (auto& c : cells) c = trim(c);
    auto used = [&](std::size_t j) { return is_missing(cells[j]); };
    bool missing = used(y_col) || used(d_col) || used(z_col);
    for (std::size_t j : x_cols) missing = missing || used(j);
    if (missing) {
      ++local.rows_dropped_missing;
      continue;
    }
    ys.push_back(parse_cell(cells[y_col], row, header[y_col]));
    ds.push_back(parse_cell(cells[d_col], row, header[d_col]));
    zs.push_back(parse_cell(cells[z_col], row, header[z_col]));
    for (std::size_t j : x_cols) xs.push_back(parse_cell(cells[j], row, header[j]));
  }

  const auto n = static_cast<Eigen::Index>(ys.size());
  const auto p = static_cast<Eigen::Index>(x_cols.size());
  Eigen::MatrixXd x(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) x(i, j) = xs[static_cast<std::size_t>(i * p + j)];
  }
  if (report) *report = local;
  return Dataset(Eigen::Map<Eigen::VectorXd>(ys.data(), n), Eigen::Map<Eigen::VectorXd>(ds.data(), n),
                 Eigen::Map<Eigen::VectorXd>(zs.data(), n), std::move(x), covariates,
                 roles.intercept_columns);
}

void write_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out.precision(17);
  out << "y,d,z";
  for (const auto& name : ds.column_names()) out << ',' << name;
  out << '\n';
  for (std::size_t i = 0; i < ds.n(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    out << ds.y()[r] << ',' << ds.d()[r] << ',' << ds.z()[r];
    for (Eigen::Index j = 0; j < ds.x().cols(); ++j) out << ',' << ds.x()(r, j);
    out << '\n';
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::size_t expanded_column_count(std::size_t p, const FeatureExpansionSpec& spec) {
  if (spec.degree == 1) return p;
  const std::size_t b = spec.base_columns.size();
  return p + b + (spec.include_interactions ? b * (b - 1) / 2 : 0);
}

Dataset expand_features(const Dataset& ds, const FeatureExpansionSpec& spec) {
  if (spec.degree != 1 && spec.degree != 2) throw ConfigError("expansion degree must be 1 or 2");
  for (std::size_t j : spec.base_columns) {
    if (j >= ds.p()) throw ConfigError("expansion base column index out of range");
  }
  if (spec.degree == 1) return ds;

  const std::size_t out_p = expanded_column_count(ds.p(), spec);
  if (out_p > spec.max_columns) {
    throw CapacityError("expansion would produce " + std::to_string(out_p) +
                        " columns (maximum " + std::to_string(spec.max_columns) + ")");
  }

  const auto n = static_cast<Eigen::Index>(ds.n());
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(out_p));
  x.leftCols(ds.x().cols()) = ds.x();
  std::vector<std::string> names = ds.column_names();
  Eigen::Index col = ds.x().cols();
  const auto& base = spec.base_columns;
  for (std::size_t a : base) {
    x.col(col++) = ds.x().col(static_cast<Eigen::Index>(a)).array().square();
    names.push_back(ds.column_names()[a] + "^2");
  }
  if (spec.include_interactions) {
    for (std::size_t i = 0; i < base.size(); ++i) {
      for (std::size_t k = i + 1; k < base.size(); ++k) {
        x.col(col++) = ds.x().col(static_cast<Eigen::Index>(base[i])).array() *
                       ds.x().col(static_cast<Eigen::Index>(base[k])).array();
        names.push_back(ds.column_names()[base[i]] + "*" + ds.column_names()[base[k]]);
      }
    }
  }

  // Columns that were already allowed to be constant stay allowed.
  std::vector<std::string> intercepts;
  for (Eigen::Index j = 0; j < ds.x().cols(); ++j) {
    const auto c = ds.x().col(j);
    if ((c.array() == c[0]).all()) intercepts.push_back(ds.column_names()[static_cast<std::size_t>(j)]);
  }
  return Dataset(ds.y(), ds.d(), ds.z(), std::move(x), std::move(names), intercepts);
}

std::vector<std::size_t> FoldAssignment::members(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] == fold) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FoldAssignment::complement(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] != fold) out.push_back(i);
  }
  return out;
}

FoldAssignment assign_folds(std::size_t n, int k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("fold count must be at least 2");
  if (n < 2 * static_cast<std::size_t>(k)) {
    throw ConfigError("need n >= 2k (n = " + std::to_string(n) + ", k = " + std::to_string(k) + ")");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    std::swap(order[i], order[rng.below(i + 1)]);
  }

  FoldAssignment out;
  out.k = k;
  out.seed = seed;
  out.fold_of.assign(n, 0);
  const std::size_t base = n / static_cast<std::size_t>(k);
  const std::size_t extra = n % static_cast<std::size_t>(k);
  std::size_t pos = 0;
  for (int f = 1; f <= k; ++f) {
    const std::size_t size = base + (static_cast<std::size_t>(f - 1) < extra ? 1 : 0);
    for (std::size_t t = 0; t < size; ++t) out.fold_of[order[pos++]] = f;
  }
  return out;
}

ReplicationConfig load_replication_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("replication config is not valid JSON: " + std::string(e.what()));
  }
  ReplicationConfig cfg;
  try {
    cfg.roles.outcome = j.at("outcome").get<std::string>();
    cfg.roles.treatment = j.at("treatment").get<std::string>();
    cfg.roles.instrument = j.at("instrument").get<std::string>();
    cfg.roles.covariates = j.at("covariates").get<std::vector<std::string>>();
    if (j.contains("intercept_columns")) {
      cfg.roles.intercept_columns = j["intercept_columns"].get<std::vector<std::string>>();
    }
    if (j.contains("expansion")) {
      cfg.degree = j["expansion"].value("degree", 1);
      cfg.interactions = j["expansion"].value("interactions", false);
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("replication config: " + std::string(e.what()));
  }
  if (cfg.roles.covariates.empty()) throw SchemaError("replication config lists no covariates");
  return cfg;
}

Dataset load_replication_dataset(const std::filesystem::path& csv, const ReplicationConfig& cfg,
                                 LoadReport* report) {
  Dataset ds = load_csv(csv, cfg.roles, report);
  FeatureExpansionSpec spec;
  spec.degree = cfg.degree;
  spec.include_interactions = cfg.interactions;
  spec.base_columns.resize(ds.p());
  std::iota(spec.base_columns.begin(), spec.base_columns.end(), 0);
  return expand_features(ds, spec);
}

}  // namespace hdqlr
