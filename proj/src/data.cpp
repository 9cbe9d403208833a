#include "hst/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace hst {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::string normalize_label(const std::string& raw) {
  std::string label = trim(raw);
  if (!label.empty() && label.back() == '.') label.pop_back();
  return label;
}

bool parse_double(const std::string& field, double& out) {
  const std::string t = trim(field);
  if (t.empty()) return false;
  char* end = nullptr;
  out = std::strtod(t.c_str(), &end);
  return end == t.c_str() + t.size() && std::isfinite(out);
}

ColumnRole role_from_string(const std::string& s) {
  if (s == "continuous") return ColumnRole::continuous;
  if (s == "categorical") return ColumnRole::categorical;
  if (s == "label") return ColumnRole::label;
  if (s == "drop") return ColumnRole::drop;
  throw InputError("schema: unknown column role \"" + s + "\"");
}

}  // namespace

void CsvSchema::validate() const {
  if (roles.empty()) throw InputError("schema: no columns");
  long labels = std::count(roles.begin(), roles.end(), ColumnRole::label);
  if (labels > 1) throw InputError("schema: more than one label column");
}

CsvSchema CsvSchema::parse(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string("schema: invalid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("columns") || !j.contains("n_columns")) {
    throw InputError("schema: requires \"columns\" and \"n_columns\"");
  }
  CsvSchema schema;
  schema.roles.assign(j.at("n_columns").get<std::size_t>(), ColumnRole::drop);
  for (const auto& [key, value] : j.at("columns").items()) {
    const std::size_t idx = std::stoul(key);
    if (idx >= schema.roles.size()) {
      throw InputError("schema: column index " + key + " out of range");
    }
    schema.roles[idx] = role_from_string(value.get<std::string>());
  }
  schema.has_header = j.value("has_header", false);
  schema.one_hot = j.value("one_hot", false);
  schema.validate();
  return schema;
}

CsvSchema CsvSchema::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open schema file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string Standardization::to_json() const {
  nlohmann::json j;
  j["feature_names"] = feature_names;
  j["mean"] = std::vector<double>(mean.begin(), mean.end());
  j["sd"] = std::vector<double>(sd.begin(), sd.end());
  return j.dump(2);
}

Standardization Standardization::parse(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string("standardization: invalid JSON: ") + e.what());
  }
  Standardization s;
  s.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  const auto mean = j.at("mean").get<std::vector<double>>();
  const auto sd = j.at("sd").get<std::vector<double>>();
  if (mean.size() != s.feature_names.size() || sd.size() != mean.size()) {
    throw InputError("standardization: inconsistent field lengths");
  }
  s.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), mean.size());
  s.sd = Eigen::Map<const Eigen::VectorXd>(sd.data(), sd.size());
  return s;
}

IngestResult ingest_csv(const std::string& path, const CsvSchema& schema) {
  schema.validate();
  std::ifstream in(path);
  if (!in) throw IoError("cannot open data file: " + path);

  std::vector<std::string> header_names(schema.roles.size());
  for (std::size_t i = 0; i < schema.roles.size(); ++i) {
    header_names[i] = "col" + std::to_string(i);
  }

  struct RawRow {
    std::vector<double> continuous;
    std::vector<std::string> categorical;
    std::string label;
  };
  std::vector<RawRow> rows;
  IngestResult result;

  std::string line;
  long line_no = 0;
  long data_rows = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (schema.has_header && !saw_header) {
      saw_header = true;
      for (std::size_t i = 0;
           i < std::min(fields.size(), header_names.size()); ++i) {
        header_names[i] = trim(fields[i]);
      }
      continue;
    }
    ++data_rows;
    if (fields.size() != schema.roles.size()) {
      result.row_errors.push_back(
          {line_no, "expected " + std::to_string(schema.roles.size()) +
                        " fields, got " + std::to_string(fields.size())});
      continue;
    }
    RawRow row;
    bool ok = true;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      switch (schema.roles[i]) {
        case ColumnRole::continuous: {
          double v = 0.0;
          if (!parse_double(fields[i], v)) {
            result.row_errors.push_back(
                {line_no, "column " + std::to_string(i) +
                              ": cannot parse \"" + trim(fields[i]) + "\""});
            ok = false;
          }
          row.continuous.push_back(v);
          break;
        }
        case ColumnRole::categorical:
          row.categorical.push_back(trim(fields[i]));
          break;
        case ColumnRole::label:
          row.label = normalize_label(fields[i]);
          break;
        case ColumnRole::drop:
          break;
      }
      if (!ok) break;
    }
    if (ok) rows.push_back(std::move(row));
  }

  if (data_rows == 0) throw IoError("data file has no rows: " + path);
  if (static_cast<double>(result.row_errors.size()) >
      0.01 * static_cast<double>(data_rows)) {
    throw IoError("more than 1% unparseable rows (" +
                  std::to_string(result.row_errors.size()) + " of " +
                  std::to_string(data_rows) + ") in " + path);
  }

  // Feature layout: continuous columns first, then (optionally) one-hot
  // indicators for each categorical column, with deterministic value order.
  std::vector<std::string> names;
  for (std::size_t i = 0; i < schema.roles.size(); ++i) {
    if (schema.roles[i] == ColumnRole::continuous) {
      names.push_back(header_names[i]);
    }
  }
  std::vector<std::vector<std::string>> category_values;
  if (schema.one_hot) {
    std::size_t n_cat = 0;
    for (auto r : schema.roles) {
      if (r == ColumnRole::categorical) ++n_cat;
    }
    std::vector<std::set<std::string>> seen(n_cat);
    for (const auto& row : rows) {
      for (std::size_t c = 0; c < row.categorical.size(); ++c) {
        seen[c].insert(row.categorical[c]);
      }
    }
    std::size_t cat_idx = 0;
    for (std::size_t i = 0; i < schema.roles.size(); ++i) {
      if (schema.roles[i] != ColumnRole::categorical) continue;
      category_values.emplace_back(seen[cat_idx].begin(), seen[cat_idx].end());
      for (const auto& value : category_values.back()) {
        names.push_back(header_names[i] + "=" + value);
      }
      ++cat_idx;
    }
  }

  Dataset& ds = result.dataset;
  ds.feature_names = names;
  ds.features.resize(static_cast<Eigen::Index>(rows.size()),
                     static_cast<Eigen::Index>(names.size()));
  ds.labels.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    Eigen::Index col = 0;
    for (double v : rows[r].continuous) ds.features(r, col++) = v;
    if (schema.one_hot) {
      for (std::size_t c = 0; c < rows[r].categorical.size(); ++c) {
        for (const auto& value : category_values[c]) {
          ds.features(r, col++) = rows[r].categorical[c] == value ? 1.0 : 0.0;
        }
      }
    }
    ds.labels.push_back(rows[r].label);
    ++result.label_counts[rows[r].label];
  }
  return result;
}

StandardizeResult standardize(const Dataset& ds,
                              const std::optional<Standardization>& stats) {
  StandardizeResult out;
  if (ds.n() == 0) throw InputError("standardize: empty dataset");

  if (stats.has_value()) {
    const Standardization& s = *stats;
    Dataset result;
    result.labels = ds.labels;
    result.feature_names = s.feature_names;
    result.features.resize(ds.n(),
                           static_cast<Eigen::Index>(s.feature_names.size()));
    for (std::size_t j = 0; j < s.feature_names.size(); ++j) {
      const auto it = std::find(ds.feature_names.begin(),
                                ds.feature_names.end(), s.feature_names[j]);
      if (it == ds.feature_names.end()) {
        throw InputError("standardize: dataset lacks feature \"" +
                         s.feature_names[j] + "\"");
      }
      if (s.sd[static_cast<Eigen::Index>(j)] <= 0.0) {
        throw InputError("standardize: supplied sd is zero for feature \"" +
                         s.feature_names[j] + "\"");
      }
      const auto src =
          static_cast<Eigen::Index>(it - ds.feature_names.begin());
      const auto dst = static_cast<Eigen::Index>(j);
      result.features.col(dst) =
          (ds.features.col(src).array() - s.mean[dst]) / s.sd[dst];
    }
    result.stats = s;
    out.dataset = std::move(result);
    return out;
  }

  const Eigen::Index n = ds.n();
  Eigen::VectorXd mean = ds.features.colwise().mean();
  Eigen::VectorXd sd(ds.dim());
  for (Eigen::Index j = 0; j < ds.dim(); ++j) {
    const double var =
        (ds.features.col(j).array() - mean[j]).square().sum() /
        std::max<double>(1.0, static_cast<double>(n - 1));
    sd[j] = std::sqrt(var);
  }

  std::vector<Eigen::Index> keep;
  for (Eigen::Index j = 0; j < ds.dim(); ++j) {
    if (sd[j] > 1e-12) {
      keep.push_back(j);
    } else {
      out.dropped_features.push_back(ds.feature_names[static_cast<std::size_t>(j)]);
    }
  }

  Dataset result;
  result.labels = ds.labels;
  result.features.resize(n, static_cast<Eigen::Index>(keep.size()));
  Standardization s;
  s.mean.resize(static_cast<Eigen::Index>(keep.size()));
  s.sd.resize(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    const Eigen::Index j = keep[k];
    const auto dst = static_cast<Eigen::Index>(k);
    result.feature_names.push_back(ds.feature_names[static_cast<std::size_t>(j)]);
    s.feature_names.push_back(ds.feature_names[static_cast<std::size_t>(j)]);
    s.mean[dst] = mean[j];
    s.sd[dst] = sd[j];
    result.features.col(dst) = (ds.features.col(j).array() - mean[j]) / sd[j];
  }
  result.stats = s;
  out.dataset = std::move(result);
  return out;
}

Dataset unstandardize(const Dataset& ds) {
  if (!ds.stats.has_value()) {
    throw InputError("unstandardize: dataset has no standardization stats");
  }
  Dataset out = ds;
  const Standardization& s = *ds.stats;
  for (Eigen::Index j = 0; j < ds.dim(); ++j) {
    out.features.col(j) = ds.features.col(j).array() * s.sd[j] + s.mean[j];
  }
  out.stats.reset();
  return out;
}

namespace {

Dataset take_rows(const Dataset& ds, const std::vector<Eigen::Index>& rows) {
  Dataset out;
  out.feature_names = ds.feature_names;
  out.stats = ds.stats;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), ds.dim());
  out.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) = ds.features.row(rows[i]);
    out.labels.push_back(ds.labels[static_cast<std::size_t>(rows[i])]);
  }
  return out;
}

}  // namespace

Partition partition_by_label(const Dataset& ds, const std::string& null_label,
                             const PartitionSpec& spec) {
  std::map<std::string, std::vector<Eigen::Index>> by_label;
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    by_label[ds.labels[static_cast<std::size_t>(i)]].push_back(i);
  }
  if (!by_label.count(null_label)) {
    throw InputError("partition_by_label: null label \"" + null_label +
                     "\" not present");
  }

  Partition out;
  out.null_split = take_rows(ds, by_label.at(null_label));

  std::vector<Eigen::Index> unknown_rows;
  for (const auto& [label, rows] : by_label) {
    if (label == null_label) continue;
    const bool named =
        std::find(spec.named_attacks.begin(), spec.named_attacks.end(),
                  label) != spec.named_attacks.end();
    if (named) {
      out.attacks.emplace(label, take_rows(ds, rows));
    } else if (static_cast<long>(rows.size()) <= spec.unknown_max_count) {
      unknown_rows.insert(unknown_rows.end(), rows.begin(), rows.end());
    } else {
      out.dropped_labels.push_back(label);
    }
  }
  std::sort(unknown_rows.begin(), unknown_rows.end());
  out.unknown = take_rows(ds, unknown_rows);
  return out;
}

}  // namespace hst
