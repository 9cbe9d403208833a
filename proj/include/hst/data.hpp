#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hst/errors.hpp"

namespace hst {

/// Column roles for ingestion. Categorical columns are dropped unless the
/// schema enables one-hot expansion.
enum class ColumnRole { continuous, categorical, label, drop };

struct CsvSchema {
  std::vector<ColumnRole> roles;
  bool has_header = false;
  bool one_hot = false;

  void validate() const;
  /// JSON object mapping column index to role, e.g.
  /// {"columns": {"0": "continuous", "4": "label"}, "n_columns": 5,
  ///  "has_header": false, "one_hot": false}. Unlisted columns are dropped.
  static CsvSchema parse(const std::string& json_text);
  static CsvSchema load(const std::string& path);
};

/// Per-feature affine transform stats, tied to feature names so they can be
/// persisted and re-applied to compatible datasets.
struct Standardization {
  std::vector<std::string> feature_names;
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;

  std::string to_json() const;
  static Standardization parse(const std::string& json_text);
};

struct Dataset {
  Eigen::MatrixXd features;
  std::vector<std::string> labels;
  std::vector<std::string> feature_names;
  std::optional<Standardization> stats;

  Eigen::Index n() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }
};

struct RowError {
  long row = 0;
  std::string message;
};

struct IngestResult {
  Dataset dataset;
  std::vector<RowError> row_errors;
  std::map<std::string, long> label_counts;
};

/// Parses a comma-separated file under the schema. Unparseable rows are
/// reported with their index and skipped; more than 1% bad rows aborts.
/// Labels are trimmed and lose one trailing '.' (the KDD label convention).
IngestResult ingest_csv(const std::string& path, const CsvSchema& schema);

struct StandardizeResult {
  Dataset dataset;
  std::vector<std::string> dropped_features;
};

/// Without stats: computes per-feature mean/sd from the data, drops
/// zero-variance features (reported in dropped_features), and attaches the
/// stats to the result. With stats: applies them by feature name
/// (evaluation mode); a zero sd in supplied stats is an error.
StandardizeResult standardize(const Dataset& ds,
                              const std::optional<Standardization>& stats = {});

/// Inverts the attached standardization.
Dataset unstandardize(const Dataset& ds);

struct PartitionSpec {
  /// Labels that get their own split regardless of size.
  std::vector<std::string> named_attacks;
  /// Remaining labels at most this large are pooled into the unknown split;
  /// larger unnamed labels are dropped (and reported).
  long unknown_max_count = 100;
};

struct Partition {
  Dataset null_split;
  std::map<std::string, Dataset> attacks;
  Dataset unknown;
  std::vector<std::string> dropped_labels;
};

Partition partition_by_label(const Dataset& ds, const std::string& null_label,
                             const PartitionSpec& spec);

}  // namespace hst
