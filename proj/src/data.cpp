#include "fairad/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "fairad/losses.hpp"
#include "fairad/rng.hpp"

namespace fairad {

std::size_t GroupedDataset::EvaluationView::anomaly_count() const {
  return static_cast<std::size_t>(
      std::count(labels.begin(), labels.end(), Label::Anomaly));
}

std::size_t GroupedDataset::EvaluationView::anomaly_count(Group g) const {
  std::size_t c = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (groups[i] == g && labels[i] == Label::Anomaly) ++c;
  }
  return c;
}

GroupedDataset::GroupedDataset(Matrix features, std::vector<Group> groups,
                               std::vector<Label> labels,
                               std::vector<std::string> feature_names)
    : features_(std::move(features)),
      group_(std::move(groups)),
      label_(std::move(labels)),
      feature_names_(std::move(feature_names)) {
  if (group_.size() != features_.rows() || label_.size() != features_.rows()) {
    throw ShapeError("dataset: group/label length must match row count");
  }
  if (feature_names_.size() != features_.cols()) {
    throw ShapeError("dataset: feature name count must match column count");
  }
  if (protected_count() == 0 || unprotected_count() == 0) {
    throw DegenerateDataError("dataset: both groups must be non-empty");
  }
  features_.ensure_finite("dataset features");
}

std::size_t GroupedDataset::protected_count() const {
  return static_cast<std::size_t>(
      std::count(group_.begin(), group_.end(), Group::Protected));
}

std::size_t GroupedDataset::unprotected_count() const {
  return static_cast<std::size_t>(
      std::count(group_.begin(), group_.end(), Group::Unprotected));
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

GroupedDataset load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DegenerateDataError("cannot open dataset file: " + path);

  std::string header_line;
  if (!std::getline(in, header_line)) {
    throw SchemaError("empty file, header row required: " + path);
  }
  const std::vector<std::string> header_raw = split_line(header_line);
  std::vector<std::string> header;
  header.reserve(header_raw.size());
  for (const auto& h : header_raw) header.push_back(trim(h));

  auto find_column = [&header](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? header.size()
                              : static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t group_idx = find_column(schema.group_column);
  if (group_idx == header.size()) {
    throw SchemaError("missing group column '" + schema.group_column + "'");
  }
  const std::size_t label_idx = find_column(schema.label_column);
  if (label_idx == header.size()) {
    throw SchemaError("missing label column '" + schema.label_column + "'");
  }

  std::vector<std::size_t> feature_cols;
  std::vector<std::string> feature_names;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c == group_idx || c == label_idx) continue;
    feature_cols.push_back(c);
    feature_names.push_back(header[c]);
  }
  if (feature_cols.empty()) throw SchemaError("no feature columns in " + path);

  std::vector<double> values;
  std::vector<Group> groups;
  std::vector<Label> labels;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split_line(line);
    if (cells.size() != header.size()) {
      throw ParseError("row " + std::to_string(row + 2) + " has " +
                       std::to_string(cells.size()) + " cells, expected " +
                       std::to_string(header.size()));
    }
    for (std::size_t c : feature_cols) {
      const std::string cell = trim(cells[c]);
      std::size_t consumed = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &consumed);
      } catch (const std::exception&) {
        consumed = 0;
      }
      if (consumed != cell.size() || cell.empty()) {
        throw ParseError("non-numeric cell at row " + std::to_string(row + 2) +
                         ", column '" + header[c] + "': '" + cell + "'");
      }
      values.push_back(v);
    }
    groups.push_back(trim(cells[group_idx]) == schema.positive_group_value
                         ? Group::Protected
                         : Group::Unprotected);
    labels.push_back(trim(cells[label_idx]) == schema.positive_label_value
                         ? Label::Anomaly
                         : Label::Normal);
    ++row;
  }
  if (row == 0) throw DegenerateDataError("no data rows in " + path);

  Matrix features(row, feature_cols.size(), std::move(values));
  return GroupedDataset(std::move(features), std::move(groups), std::move(labels),
                        std::move(feature_names));
}

void save_csv(const GroupedDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open for writing: " + path);
  for (std::size_t j = 0; j < ds.feature_names_.size(); ++j) {
    out << ds.feature_names_[j] << ",";
  }
  out << "group,label\n";
  char buf[40];
  for (std::size_t i = 0; i < ds.size(); ++i) {
    auto row = ds.features_.row(i);
    for (double v : row) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << buf << ",";
    }
    out << (ds.group_[i] == Group::Protected ? "P" : "U") << ","
        << (ds.label_[i] == Label::Anomaly ? "1" : "0") << "\n";
  }
}

CsvSchema export_schema() { return CsvSchema{"group", "label", "P", "1"}; }

void SyntheticSpec::validate() const {
  if (dim == 0) throw ConfigError("synthetic: dim must be positive");
  if (protected_count < 2 || unprotected_count < 2) {
    throw DegenerateDataError("synthetic: each group needs at least 2 rows");
  }
  if (anomaly_rate_p <= 0.0 || anomaly_rate_p >= 1.0 || anomaly_rate_u <= 0.0 ||
      anomaly_rate_u >= 1.0) {
    throw ConfigError("synthetic: anomaly rates must lie in (0, 1)");
  }
  if (!group_shift.empty() && group_shift.size() != dim) {
    throw ConfigError("synthetic: group_shift dimension mismatch");
  }
  if (!anomaly_shift.empty() && anomaly_shift.size() != dim) {
    throw ConfigError("synthetic: anomaly_shift dimension mismatch");
  }
  if (noise_std <= 0.0) throw ConfigError("synthetic: noise_std must be positive");
}

GroupedDataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const std::size_t total = spec.protected_count + spec.unprotected_count;
  Matrix features(total, spec.dim);
  std::vector<Group> groups(total);
  std::vector<Label> labels(total);

  auto anomalies_of = [](std::size_t count, double rate) {
    return static_cast<std::size_t>(std::llround(rate * static_cast<double>(count)));
  };
  const std::size_t anomalies_u = anomalies_of(spec.unprotected_count, spec.anomaly_rate_u);
  const std::size_t anomalies_p = anomalies_of(spec.protected_count, spec.anomaly_rate_p);

  std::size_t row = 0;
  auto emit_block = [&](Group g, std::size_t count, std::size_t anomalies) {
    for (std::size_t i = 0; i < count; ++i, ++row) {
      const bool anomaly = i >= count - anomalies;
      groups[row] = g;
      labels[row] = anomaly ? Label::Anomaly : Label::Normal;
      auto r = features.row(row);
      for (std::size_t j = 0; j < spec.dim; ++j) {
        double center = 0.0;
        if (g == Group::Protected && !spec.group_shift.empty()) {
          center += spec.group_shift[j];
        }
        if (anomaly && !spec.anomaly_shift.empty()) center += spec.anomaly_shift[j];
        r[j] = center + spec.noise_std * rng.normal();
      }
    }
  };
  emit_block(Group::Unprotected, spec.unprotected_count, anomalies_u);
  emit_block(Group::Protected, spec.protected_count, anomalies_p);

  std::vector<std::string> names(spec.dim);
  for (std::size_t j = 0; j < spec.dim; ++j) names[j] = "f" + std::to_string(j);
  return GroupedDataset(std::move(features), std::move(groups), std::move(labels),
                        std::move(names));
}

namespace {

// Stratified subsample of one group: pick `target` rows keeping the anomaly
// rate within one example, deterministic per rng state.
std::vector<std::size_t> stratified_pick(const std::vector<std::size_t>& anomalies,
                                         const std::vector<std::size_t>& normals,
                                         std::size_t target, Rng& rng) {
  const std::size_t available = anomalies.size() + normals.size();
  const double rate =
      static_cast<double>(anomalies.size()) / static_cast<double>(available);
  std::size_t want_anoms = static_cast<std::size_t>(
      std::llround(rate * static_cast<double>(target)));
  want_anoms = std::min(want_anoms, anomalies.size());
  want_anoms = std::min(want_anoms, target);
  const std::size_t want_normals = target - want_anoms;
  if (want_normals > normals.size()) {
    throw CapacityError("resample: group has only " + std::to_string(normals.size()) +
                        " normal rows, need " + std::to_string(want_normals));
  }
  std::vector<std::size_t> pick;
  pick.reserve(target);
  std::vector<std::size_t> a = anomalies;
  std::vector<std::size_t> n = normals;
  rng.shuffle(a);
  rng.shuffle(n);
  pick.insert(pick.end(), a.begin(), a.begin() + static_cast<std::ptrdiff_t>(want_anoms));
  pick.insert(pick.end(), n.begin(), n.begin() + static_cast<std::ptrdiff_t>(want_normals));
  return pick;
}

}  // namespace

GroupedDataset resample_ratio(const GroupedDataset& ds, std::uint64_t ratio_u,
                              std::uint64_t ratio_p, std::uint64_t seed) {
  if (ratio_u == 0 || ratio_p == 0) {
    throw CapacityError("resample: ratio parts must be positive");
  }
  const std::size_t m = ds.unprotected_count();
  const std::size_t n = ds.protected_count();

  // Largest feasible pair with |U'|:|P'| = ratio_u:ratio_p; the smaller
  // group's count is floored.
  std::size_t target_u = std::min<std::size_t>(
      m, static_cast<std::size_t>(static_cast<unsigned long long>(n) * ratio_u / ratio_p));
  std::size_t target_p = std::min<std::size_t>(
      n, static_cast<std::size_t>(static_cast<unsigned long long>(target_u) * ratio_p /
                                  ratio_u));
  if (target_u < 2 || target_p < 2) {
    throw CapacityError("resample: ratio " + std::to_string(ratio_u) + ":" +
                        std::to_string(ratio_p) + " infeasible for groups of size m=" +
                        std::to_string(m) + ", n=" + std::to_string(n));
  }

  std::vector<std::size_t> anoms_u, normals_u, anoms_p, normals_p;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const bool anomaly = ds.label_[i] == Label::Anomaly;
    if (ds.group_[i] == Group::Protected) {
      (anomaly ? anoms_p : normals_p).push_back(i);
    } else {
      (anomaly ? anoms_u : normals_u).push_back(i);
    }
  }

  Rng rng(seed);
  std::vector<std::size_t> selected = stratified_pick(anoms_u, normals_u, target_u, rng);
  const std::vector<std::size_t> sel_p = stratified_pick(anoms_p, normals_p, target_p, rng);
  selected.insert(selected.end(), sel_p.begin(), sel_p.end());
  std::sort(selected.begin(), selected.end());

  Matrix features = ds.features_.gather_rows(selected);
  std::vector<Group> groups(selected.size());
  std::vector<Label> labels(selected.size());
  for (std::size_t i = 0; i < selected.size(); ++i) {
    groups[i] = ds.group_[selected[i]];
    labels[i] = ds.label_[selected[i]];
  }
  return GroupedDataset(std::move(features), std::move(groups), std::move(labels),
                        ds.feature_names_);
}

GroupedDataset standardize(const GroupedDataset& ds) {
  const std::size_t rows = ds.size();
  const std::size_t cols = ds.dim();
  Standardization record;
  record.fitted = true;
  record.original_dim = cols;
  record.mean.resize(cols, 0.0);
  record.stddev.resize(cols, 0.0);

  for (std::size_t i = 0; i < rows; ++i) {
    auto r = ds.features_.row(i);
    for (std::size_t j = 0; j < cols; ++j) record.mean[j] += r[j];
  }
  for (double& v : record.mean) v /= static_cast<double>(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    auto r = ds.features_.row(i);
    for (std::size_t j = 0; j < cols; ++j) {
      const double d = r[j] - record.mean[j];
      record.stddev[j] += d * d;
    }
  }
  for (double& v : record.stddev) v = std::sqrt(v / static_cast<double>(rows));

  for (std::size_t j = 0; j < cols; ++j) {
    if (record.stddev[j] > 0.0) {
      record.kept.push_back(j);
    } else {
      emit_warning("standardize: dropping constant feature '" + ds.feature_names_[j] +
                   "'");
    }
  }
  if (record.kept.empty()) {
    throw DegenerateDataError("standardize: all features are constant");
  }

  Matrix out(rows, record.kept.size());
  for (std::size_t i = 0; i < rows; ++i) {
    auto src = ds.features_.row(i);
    auto dst = out.row(i);
    for (std::size_t jj = 0; jj < record.kept.size(); ++jj) {
      const std::size_t j = record.kept[jj];
      dst[jj] = (src[j] - record.mean[j]) / record.stddev[j];
    }
  }
  std::vector<std::string> names;
  for (std::size_t j : record.kept) names.push_back(ds.feature_names_[j]);

  GroupedDataset result(std::move(out), ds.group_, ds.label_, std::move(names));
  result.standardization_ = std::move(record);
  return result;
}

Matrix inverse_standardize(const Standardization& record, const Matrix& standardized) {
  if (!record.fitted) throw ConfigError("inverse_standardize: record not fitted");
  if (standardized.cols() != record.kept.size()) {
    throw ShapeError("inverse_standardize: column count mismatch");
  }
  Matrix out(standardized.rows(), record.original_dim);
  for (std::size_t i = 0; i < standardized.rows(); ++i) {
    auto dst = out.row(i);
    for (std::size_t j = 0; j < record.original_dim; ++j) dst[j] = record.mean[j];
    auto src = standardized.row(i);
    for (std::size_t jj = 0; jj < record.kept.size(); ++jj) {
      const std::size_t j = record.kept[jj];
      dst[j] = record.mean[j] + src[jj] * record.stddev[j];
    }
  }
  return out;
}

}  // namespace fairad
