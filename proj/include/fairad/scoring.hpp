#pragma once

#include <cstdint>
#include <vector>

#include "fairad/matrix.hpp"
#include "fairad/nn.hpp"

namespace fairad {

enum class Group : std::uint8_t { Unprotected = 0, Protected = 1 };
enum class Label : std::uint8_t { Normal = 0, Anomaly = 1 };

/// Reconstruction-error anomaly score per row: s(x) = ||x - G(x)||^2.
std::vector<double> anomaly_scores(const AutoencoderModel& model,
                                   const Matrix& features);

/// Descending ranking with deterministic tie-breaking by ascending
/// original index.
struct RankingResult {
  std::vector<double> scores;
  std::vector<std::size_t> order;  // order[0] is the highest-scored index
  std::vector<bool> top_k_flags;
  std::size_t k = 0;
};

RankingResult rank_descending(const std::vector<double>& scores, std::size_t k);

/// Fraction of all true anomalies inside the global top-k.
double recall_at_k(const std::vector<double>& scores, const std::vector<Label>& labels,
                   std::size_t k);

/// Area under the ROC curve, equal to the Mann-Whitney statistic
/// P(score+ > score-) + 0.5 P(tie). O(n log n) via midranks.
double rocauc(const std::vector<double>& scores, const std::vector<Label>& labels);

struct MetricsReport {
  std::size_t k = 0;
  double recall_at_k = 0.0;
  double rocauc = 0.0;
  double rec_diff = 0.0;
  double acc_diff = 0.0;
  double recall_protected = 0.0;
  double recall_unprotected = 0.0;
  double accuracy_protected = 0.0;
  double accuracy_unprotected = 0.0;
  std::size_t identified_protected = 0;    // rows of the group inside the top-k
  std::size_t identified_unprotected = 0;
  std::size_t true_identified_protected = 0;  // true anomalies among those
  std::size_t true_identified_unprotected = 0;
  std::size_t anomalies_protected = 0;
  std::size_t anomalies_unprotected = 0;
};

/// Group fairness metrics from a global top-k selection. Each group must
/// contain at least one anomaly.
MetricsReport group_metrics(const std::vector<double>& scores,
                            const std::vector<Label>& labels,
                            const std::vector<Group>& groups, std::size_t k);

}  // namespace fairad
