#include "fairad/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fairad {

std::vector<double> anomaly_scores(const AutoencoderModel& model,
                                   const Matrix& features) {
  const ForwardCache cache = forward(model, features);
  const Matrix& recon = cache.recon();
  std::vector<double> scores(features.rows(), 0.0);
  for (std::size_t i = 0; i < features.rows(); ++i) {
    auto x = features.row(i);
    auto r = recon.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double d = x[j] - r[j];
      s += d * d;
    }
    scores[i] = s;
  }
  return scores;
}

RankingResult rank_descending(const std::vector<double>& scores, std::size_t k) {
  if (k > scores.size()) {
    throw ShapeError("rank_descending: k exceeds number of examples");
  }
  RankingResult r;
  r.scores = scores;
  r.k = k;
  r.order.resize(scores.size());
  std::iota(r.order.begin(), r.order.end(), std::size_t{0});
  std::stable_sort(r.order.begin(), r.order.end(),
                   [&scores](std::size_t a, std::size_t b) {
                     return scores[a] > scores[b];
                   });
  r.top_k_flags.assign(scores.size(), false);
  for (std::size_t i = 0; i < k; ++i) r.top_k_flags[r.order[i]] = true;
  return r;
}

double recall_at_k(const std::vector<double>& scores, const std::vector<Label>& labels,
                   std::size_t k) {
  if (scores.size() != labels.size()) {
    throw ShapeError("recall_at_k: scores/labels length mismatch");
  }
  const std::size_t positives = static_cast<std::size_t>(
      std::count(labels.begin(), labels.end(), Label::Anomaly));
  if (positives == 0) {
    throw UndefinedMetricError("recall_at_k is undefined without positive labels");
  }
  const RankingResult r = rank_descending(scores, k);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (r.top_k_flags[i] && labels[i] == Label::Anomaly) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(positives);
}

double rocauc(const std::vector<double>& scores, const std::vector<Label>& labels) {
  if (scores.size() != labels.size()) {
    throw ShapeError("rocauc: scores/labels length mismatch");
  }
  std::size_t pos = 0, neg = 0;
  for (Label l : labels) (l == Label::Anomaly ? pos : neg) += 1;
  if (pos == 0 || neg == 0) {
    throw UndefinedMetricError("rocauc needs at least one positive and one negative");
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&scores](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });

  // Midranks over tie runs, then the Mann-Whitney identity.
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) {
      if (labels[order[t]] == Label::Anomaly) rank_sum_pos += midrank;
    }
    i = j + 1;
  }
  const double p = static_cast<double>(pos);
  const double q = static_cast<double>(neg);
  return (rank_sum_pos - p * (p + 1.0) / 2.0) / (p * q);
}

MetricsReport group_metrics(const std::vector<double>& scores,
                            const std::vector<Label>& labels,
                            const std::vector<Group>& groups, std::size_t k) {
  if (scores.size() != labels.size() || scores.size() != groups.size()) {
    throw ShapeError("group_metrics: input length mismatch");
  }
  MetricsReport rep;
  rep.k = k;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == Label::Anomaly) {
      (groups[i] == Group::Protected ? rep.anomalies_protected
                                     : rep.anomalies_unprotected) += 1;
    }
  }
  if (rep.anomalies_protected == 0) {
    throw UndefinedMetricError("group_metrics: protected group has no anomalies");
  }
  if (rep.anomalies_unprotected == 0) {
    throw UndefinedMetricError("group_metrics: unprotected group has no anomalies");
  }

  const RankingResult r = rank_descending(scores, k);
  std::size_t size_p = 0, size_u = 0;
  std::size_t correct_p = 0, correct_u = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool flagged = r.top_k_flags[i];
    const bool anomaly = labels[i] == Label::Anomaly;
    if (groups[i] == Group::Protected) {
      ++size_p;
      if (flagged) {
        ++rep.identified_protected;
        if (anomaly) ++rep.true_identified_protected;
      }
      if (flagged == anomaly) ++correct_p;
    } else {
      ++size_u;
      if (flagged) {
        ++rep.identified_unprotected;
        if (anomaly) ++rep.true_identified_unprotected;
      }
      if (flagged == anomaly) ++correct_u;
    }
  }
  rep.recall_protected = static_cast<double>(rep.true_identified_protected) /
                         static_cast<double>(rep.anomalies_protected);
  rep.recall_unprotected = static_cast<double>(rep.true_identified_unprotected) /
                           static_cast<double>(rep.anomalies_unprotected);
  rep.accuracy_protected = static_cast<double>(correct_p) / static_cast<double>(size_p);
  rep.accuracy_unprotected =
      static_cast<double>(correct_u) / static_cast<double>(size_u);
  rep.rec_diff = std::fabs(rep.recall_protected - rep.recall_unprotected);
  rep.acc_diff = std::fabs(rep.accuracy_protected - rep.accuracy_unprotected);
  rep.recall_at_k = recall_at_k(scores, labels, k);
  rep.rocauc = fairad::rocauc(scores, labels);
  return rep;
}

}  // namespace fairad
