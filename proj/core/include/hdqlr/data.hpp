#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hdqlr {

/// One sample of W_i = (Y_i, D_i, Z_i, X_i').
///
/// Immutable once built; construction validates that d and z are binary, every
/// entry is finite, p >= 1, and no covariate column is constant unless its name
/// is listed in `intercept_columns`.
class Dataset {
 public:
  Dataset(Eigen::VectorXd y, Eigen::VectorXd d, Eigen::VectorXd z, Eigen::MatrixXd x,
          std::vector<std::string> column_names,
          const std::vector<std::string>& intercept_columns = {});

  const Eigen::VectorXd& y() const { return y_; }
  const Eigen::VectorXd& d() const { return d_; }
  const Eigen::VectorXd& z() const { return z_; }
  const Eigen::MatrixXd& x() const { return x_; }
  const std::vector<std::string>& column_names() const { return column_names_; }

  std::size_t n() const { return static_cast<std::size_t>(y_.size()); }
  std::size_t p() const { return static_cast<std::size_t>(x_.cols()); }

 private:
  Eigen::VectorXd y_;
  Eigen::VectorXd d_;
  Eigen::VectorXd z_;
  Eigen::MatrixXd x_;
  std::vector<std::string> column_names_;
};

// Which CSV header names play which role.
struct ColumnRoles {
  std::string outcome = "y";
  std::string treatment = "d";
  std::string instrument = "z";
  // Empty means "every other column".
  std::vector<std::string> covariates;
  // Covariates allowed to be constant (e.g. an explicit intercept column).
  std::vector<std::string> intercept_columns;
};

struct LoadReport {
  std::size_t rows_read = 0;
  // Rows with one or more empty / NA cells, excluded from the Dataset.
  std::size_t rows_dropped_missing = 0;
};

// Reads a comma-separated UTF-8 file with a header row. Row order is preserved.
Dataset load_csv(const std::filesystem::path& path, const ColumnRoles& roles,
                 LoadReport* report = nullptr);

// Writes y,d,z followed by the covariates, 17 significant digits.
void write_csv(const Dataset& ds, const std::filesystem::path& path);

struct FeatureExpansionSpec {
  std::vector<std::size_t> base_columns;  // indices into the covariate matrix
  int degree = 1;                         // 1 or 2
  bool include_interactions = false;
  std::size_t max_columns = 20000;
};

/// Appends squares ("a^2") and, optionally, pairwise products ("a*b", a before
/// b in base_columns order) of the base columns. Original columns are kept in
/// place. degree = 1 returns the input unchanged.
Dataset expand_features(const Dataset& ds, const FeatureExpansionSpec& spec);

// Number of covariates expand_features would produce.
std::size_t expanded_column_count(std::size_t p, const FeatureExpansionSpec& spec);

struct FoldAssignment {
  std::vector<int> fold_of;  // values in 1..k
  int k = 0;
  std::uint64_t seed = 0;

  // 0-based row indices of fold `fold` (1-based), ascending.
  std::vector<std::size_t> members(int fold) const;
  // Rows not in `fold`, ascending.
  std::vector<std::size_t> complement(int fold) const;
};

/// Seeded Fisher-Yates shuffle of 0..n-1, then contiguous blocks; the first
/// n % k folds get one extra row. Deterministic in (n, k, seed).
FoldAssignment assign_folds(std::size_t n, int k, std::uint64_t seed);

// JSON replication config: {outcome, treatment, instrument, covariates: [..],
// expansion: {degree, interactions}}.
struct ReplicationConfig {
  ColumnRoles roles;
  int degree = 1;
  bool interactions = false;
};

ReplicationConfig load_replication_config(const std::filesystem::path& path);

// Loads the CSV named by the config's roles and applies its expansion to all
// listed covariates.
Dataset load_replication_dataset(const std::filesystem::path& csv, const ReplicationConfig& cfg,
                                 LoadReport* report = nullptr);

}  // namespace hdqlr
