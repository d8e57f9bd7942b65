#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fairad/matrix.hpp"
#include "fairad/scoring.hpp"

namespace fairad {

/// Recorded z-score transform; keeps every original feature's statistics so
/// the mapping can be inverted even for dropped constant columns.
struct Standardization {
  bool fitted = false;
  std::size_t original_dim = 0;
  std::vector<double> mean;          // per original feature
  std::vector<double> stddev;        // per original feature (population)
  std::vector<std::size_t> kept;     // original indices of retained features
};

/// Two-group tabular dataset. Labels are held-out ground truth: the
/// training view deliberately has no label accessor, only the evaluation
/// view exposes them.
class GroupedDataset {
 public:
  struct TrainingView {
    const Matrix& features;
    const std::vector<Group>& groups;
    std::size_t size() const { return features.rows(); }
    std::size_t dim() const { return features.cols(); }
  };

  struct EvaluationView {
    const Matrix& features;
    const std::vector<Group>& groups;
    const std::vector<Label>& labels;
    std::size_t size() const { return features.rows(); }
    std::size_t anomaly_count() const;
    std::size_t anomaly_count(Group g) const;
  };

  GroupedDataset(Matrix features, std::vector<Group> groups, std::vector<Label> labels,
                 std::vector<std::string> feature_names);

  std::size_t size() const { return features_.rows(); }
  std::size_t dim() const { return features_.cols(); }
  std::size_t protected_count() const;
  std::size_t unprotected_count() const;

  const Matrix& features() const { return features_; }
  const std::vector<Group>& groups() const { return group_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  const Standardization& standardization() const { return standardization_; }

  TrainingView training_view() const { return {features_, group_}; }
  EvaluationView evaluation_view() const { return {features_, group_, label_}; }

  friend GroupedDataset standardize(const GroupedDataset& ds);
  friend GroupedDataset resample_ratio(const GroupedDataset& ds, std::uint64_t ratio_u,
                                       std::uint64_t ratio_p, std::uint64_t seed);
  friend void save_csv(const GroupedDataset& ds, const std::string& path);

 private:
  Matrix features_;
  std::vector<Group> group_;
  std::vector<Label> label_;
  std::vector<std::string> feature_names_;
  Standardization standardization_;
};

struct CsvSchema {
  std::string group_column;
  std::string label_column;
  std::string positive_group_value;  // marks the protected group
  std::string positive_label_value;  // marks anomalies
};

/// Loads a header-first comma-separated file. All columns other than the
/// group and label columns must be numeric and become features in file
/// order; row order is preserved.
GroupedDataset load_csv(const std::string& path, const CsvSchema& schema);

/// Writes the dataset in the canonical export dialect: feature columns,
/// then "group" with values U/P, then "label" with values 0/1.
void save_csv(const GroupedDataset& ds, const std::string& path);

/// Schema matching save_csv output.
CsvSchema export_schema();

struct SyntheticSpec {
  std::size_t dim = 8;
  std::size_t protected_count = 0;    // n
  std::size_t unprotected_count = 0;  // m
  double anomaly_rate_p = 0.1;
  double anomaly_rate_u = 0.1;
  std::vector<double> group_shift;    // added to protected rows
  std::vector<double> anomaly_shift;  // added to anomaly rows
  double noise_std = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Gaussian-cluster generator: unprotected normals at the origin, protected
/// normals at group_shift, anomalies offset by anomaly_shift. Deterministic
/// per seed; rows are emitted U block first, normals before anomalies.
GroupedDataset generate_synthetic(const SyntheticSpec& spec);

/// Subsamples without replacement to a |U|:|P| = ratio_u:ratio_p size ratio,
/// preserving each group's anomaly rate within one example. The smaller
/// group'starget is floored. Selected rows keep their original order.
GroupedDataset resample_ratio(const GroupedDataset& ds, std::uint64_t ratio_u,
                              std::uint64_t ratio_p, std::uint64_t seed);

/// Z-scores every feature over the full dataset; constant features are
/// dropped with a warning. The transform is recorded for inversion.
GroupedDataset standardize(const GroupedDataset& ds);

/// Maps standardized features back to the original space, reinstating
/// dropped constant columns at their recorded means.
Matrix inverse_standardize(const Standardization& record, const Matrix& standardized);

}  // namespace fairad
