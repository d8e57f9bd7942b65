#include "fairad/theory.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <numeric>

#include "fairad/rng.hpp"

namespace fairad {

Binning Binning::grid(double width) {
  if (width <= 0.0) throw ConfigError("grid binning needs a positive cell width");
  return Binning{Mode::Grid, width};
}

namespace {

std::vector<long long> cell_of(std::span<const double> row, const Binning& binning) {
  std::vector<long long> key(row.size());
  if (binning.mode == Binning::Mode::Exact) {
    // Exact binning: one cell per distinct value pattern, via bit images.
    for (std::size_t j = 0; j < row.size(); ++j) {
      double v = row[j] == 0.0 ? 0.0 : row[j];  // fold -0.0 into 0.0
      long long bits;
      static_assert(sizeof(bits) == sizeof(v));
      std::memcpy(&bits, &v, sizeof(bits));
      key[j] = bits;
    }
  } else {
    for (std::size_t j = 0; j < row.size(); ++j) {
      key[j] = static_cast<long long>(std::floor(row[j] / binning.cell_width));
    }
  }
  return key;
}

}  // namespace

double empirical_tv(const Matrix& p_samples, const Matrix& q_samples,
                    const Binning& binning) {
  if (p_samples.rows() == 0 || q_samples.rows() == 0) {
    throw DegenerateDataError("empirical_tv: empty sample set");
  }
  if (p_samples.cols() != q_samples.cols()) {
    throw ShapeError("empirical_tv: sample dimensions differ");
  }
  std::map<std::vector<long long>, std::pair<double, double>> cells;
  for (std::size_t i = 0; i < p_samples.rows(); ++i) {
    cells[cell_of(p_samples.row(i), binning)].first += 1.0;
  }
  for (std::size_t i = 0; i < q_samples.rows(); ++i) {
    cells[cell_of(q_samples.row(i), binning)].second += 1.0;
  }
  const double np = static_cast<double>(p_samples.rows());
  const double nq = static_cast<double>(q_samples.rows());
  double tv = 0.0;
  for (const auto& [key, freq] : cells) {
    tv += std::fabs(freq.first / np - freq.second / nq);
  }
  return 0.5 * tv;
}

namespace {

Matrix normalize_rows_or_throw(const Matrix& z, const char* which) {
  Matrix out = z;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto row = out.row(i);
    const double n = norm(row);
    if (n == 0.0) {
      throw DegenerateVectorError(std::string("tv_bound_check: zero-norm row in ") +
                                  which);
    }
    for (double& v : row) v /= n;
  }
  return out;
}

// Scott's rule over the pooled per-dimension variance of one group.
double scott_bandwidth(const Matrix& points) {
  const double n = static_cast<double>(points.rows());
  const double d = static_cast<double>(points.cols());
  double var_sum = 0.0;
  for (std::size_t j = 0; j < points.cols(); ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < points.rows(); ++i) mean += points(i, j);
    mean /= n;
    double var = 0.0;
    for (std::size_t i = 0; i < points.rows(); ++i) {
      const double diff = points(i, j) - mean;
      var += diff * diff;
    }
    var_sum += var / n;
  }
  const double sigma = std::sqrt(var_sum / d);
  const double h = sigma * std::pow(n, -1.0 / (d + 4.0));
  return std::max(h, 1e-6);
}

// Gaussian KDE of `points` evaluated at every pooled point, normalized to a
// probability vector over the pooled points.
std::vector<double> normalized_kde(const Matrix& pooled, const Matrix& points,
                                   double bandwidth) {
  std::vector<double> density(pooled.rows(), 0.0);
  const double inv_two_h2 = 1.0 / (2.0 * bandwidth * bandwidth);
  for (std::size_t i = 0; i < pooled.rows(); ++i) {
    auto x = pooled.row(i);
    double acc = 0.0;
    for (std::size_t t = 0; t < points.rows(); ++t) {
      auto y = points.row(t);
      double d2 = 0.0;
      for (std::size_t j = 0; j < x.size(); ++j) {
        const double diff = x[j] - y[j];
        d2 += diff * diff;
      }
      acc += std::exp(-d2 * inv_two_h2);
    }
    density[i] = acc;
  }
  double total = 0.0;
  for (double v : density) total += v;
  for (double& v : density) v /= total;
  return density;
}

// Max |p(x) - p(x')| / ||x - x'|| over distinct sample pairs.
double max_pair_slope(const Matrix& pooled, const std::vector<double>& density) {
  double c = 0.0;
  for (std::size_t i = 0; i < pooled.rows(); ++i) {
    for (std::size_t j = i + 1; j < pooled.rows(); ++j) {
      auto a = pooled.row(i);
      auto b = pooled.row(j);
      double d2 = 0.0;
      for (std::size_t t = 0; t < a.size(); ++t) {
        const double diff = a[t] - b[t];
        d2 += diff * diff;
      }
      const double dist = std::sqrt(d2);
      if (dist < 1e-12) continue;
      c = std::max(c, std::fabs(density[i] - density[j]) / dist);
    }
  }
  return c;
}

double point_distance(std::span<const double> a, std::span<const double> b,
                      SigmaForm form) {
  double cos_ab = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) cos_ab += a[j] * b[j];
  cos_ab = std::min(1.0, std::max(-1.0, cos_ab));
  if (form == SigmaForm::Cosine) {
    return std::sqrt(std::max(0.0, 2.0 - 2.0 * cos_ab));
  }
  if (cos_ab <= 0.0) {
    throw DomainError("LogCosine sigma form undefined for non-positive cosine");
  }
  return std::sqrt(2.0 - 2.0 * std::log(cos_ab));
}

}  // namespace

TvBoundReport tv_bound_check(const Matrix& z_p, const Matrix& z_u, SigmaForm form) {
  if (z_p.rows() == 0 || z_u.rows() == 0) {
    throw DegenerateDataError("tv_bound_check: empty group");
  }
  if (z_p.cols() != z_u.cols()) {
    throw ShapeError("tv_bound_check: representation width mismatch");
  }
  const Matrix unit_p = normalize_rows_or_throw(z_p, "P");
  const Matrix unit_u = normalize_rows_or_throw(z_u, "U");

  // Pooled support X: U rows first, then P rows.
  const std::size_t m = unit_u.rows();
  const std::size_t n = unit_p.rows();
  Matrix pooled(m + n, unit_u.cols());
  for (std::size_t i = 0; i < m; ++i) {
    auto dst = pooled.row(i);
    auto src = unit_u.row(i);
    std::copy(src.begin(), src.end(), dst.begin());
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto dst = pooled.row(m + i);
    auto src = unit_p.row(i);
    std::copy(src.begin(), src.end(), dst.begin());
  }

  TvBoundReport rep;
  rep.cardinality = m + n;
  rep.bandwidth_u = scott_bandwidth(unit_u);
  rep.bandwidth_p = scott_bandwidth(unit_p);
  const std::vector<double> p_u = normalized_kde(pooled, unit_u, rep.bandwidth_u);
  const std::vector<double> p_p = normalized_kde(pooled, unit_p, rep.bandwidth_p);

  double tv = 0.0;
  std::size_t argmin = 0;
  double best_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pooled.rows(); ++i) {
    const double gap = std::fabs(p_u[i] - p_p[i]);
    tv += gap;
    if (gap < best_gap) {
      best_gap = gap;
      argmin = i;
    }
  }
  rep.tv_hat = 0.5 * tv;
  rep.argmin_index = argmin;
  rep.delta = best_gap;

  rep.sigma = 0.0;
  for (std::size_t i = 0; i < pooled.rows(); ++i) {
    rep.sigma += point_distance(pooled.row(i), pooled.row(argmin), form);
  }
  rep.c_u = max_pair_slope(pooled, p_u);
  rep.c_p = max_pair_slope(pooled, p_p);
  rep.bound_rhs = 0.5 * (static_cast<double>(rep.cardinality) * rep.delta +
                         (rep.c_u + rep.c_p) * rep.sigma);
  rep.holds = rep.tv_hat <= rep.bound_rhs + 1e-9;

  const SurrogateLosses sur = surrogate_losses(unit_p, unit_u);
  rep.surrogate_fair = sur.l_fair_prime;
  rep.surrogate_unif = sur.l_unif_prime;
  return rep;
}

SurrogateLosses surrogate_losses(const Matrix& z_p, const Matrix& z_u) {
  if (z_p.rows() == 0 || z_u.rows() == 0) {
    throw InsufficientGroupError("surrogate_losses: empty group");
  }
  if (z_p.cols() != z_u.cols()) {
    throw ShapeError("surrogate_losses: representation width mismatch");
  }
  auto dist = [](std::span<const double> a, std::span<const double> b) {
    double d2 = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
      const double diff = a[j] - b[j];
      d2 += diff * diff;
    }
    return std::sqrt(d2);
  };
  SurrogateLosses out;
  for (std::size_t j = 0; j < z_u.rows(); ++j) {
    for (std::size_t k = 0; k < z_p.rows(); ++k) {
      out.l_fair_prime += dist(z_u.row(j), z_p.row(k));
    }
  }
  double within = 0.0;
  for (std::size_t j = 0; j < z_u.rows(); ++j) {
    for (std::size_t k = 0; k < z_u.rows(); ++k) {
      if (j != k) within += dist(z_u.row(j), z_u.row(k));
    }
  }
  for (std::size_t j = 0; j < z_p.rows(); ++j) {
    for (std::size_t k = 0; k < z_p.rows(); ++k) {
      if (j != k) within += dist(z_p.row(j), z_p.row(k));
    }
  }
  out.l_unif_prime = -within;
  return out;
}

RademacherEstimate rademacher_exhaustive(const Matrix& function_values) {
  if (function_values.rows() == 0) {
    throw LookupError("empirical_rademacher: empty function family");
  }
  const std::size_t d = function_values.cols();
  if (d == 0) throw DegenerateDataError("empirical_rademacher: no samples");
  if (d > 20) {
    throw ConfigError("rademacher_exhaustive: 2^" + std::to_string(d) +
                      " sign vectors is too many");
  }
  const std::size_t count = std::size_t{1} << d;
  double total = 0.0;
  for (std::size_t mask = 0; mask < count; ++mask) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < function_values.rows(); ++r) {
      auto row = function_values.row(r);
      double s = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        s += ((mask >> i) & 1u) ? row[i] : -row[i];
      }
      best = std::max(best, s);
    }
    total += best / static_cast<double>(d);
  }
  RademacherEstimate est;
  est.value = total / static_cast<double>(count);
  est.exhaustive = true;
  est.trials = count;
  return est;
}

RademacherEstimate rademacher_monte_carlo(const Matrix& function_values,
                                          std::size_t trials, std::uint64_t seed) {
  if (function_values.rows() == 0) {
    throw LookupError("empirical_rademacher: empty function family");
  }
  const std::size_t d = function_values.cols();
  if (d == 0) throw DegenerateDataError("empirical_rademacher: no samples");
  if (trials == 0) throw ConfigError("empirical_rademacher: trials must be >= 1");

  Rng rng(seed);
  std::vector<double> signs(d);
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    for (std::size_t i = 0; i < d; ++i) signs[i] = rng.sign();
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < function_values.rows(); ++r) {
      auto row = function_values.row(r);
      double s = 0.0;
      for (std::size_t i = 0; i < d; ++i) s += signs[i] * row[i];
      best = std::max(best, s);
    }
    const double v = best / static_cast<double>(d);
    sum += v;
    sum_sq += v * v;
  }
  RademacherEstimate est;
  est.value = sum / static_cast<double>(trials);
  const double variance =
      std::max(0.0, sum_sq / static_cast<double>(trials) - est.value * est.value);
  est.std_error = std::sqrt(variance / static_cast<double>(trials));
  est.exhaustive = false;
  est.trials = trials;
  return est;
}

RademacherEstimate empirical_rademacher(const Matrix& function_values,
                                        std::size_t trials, std::uint64_t seed) {
  if (function_values.cols() <= 12 && function_values.rows() > 0) {
    return rademacher_exhaustive(function_values);
  }
  return rademacher_monte_carlo(function_values, trials, seed);
}

namespace {

std::vector<double> threshold_grid_over(const std::vector<double>& scores,
                                        std::size_t count) {
  const auto [lo_it, hi_it] = std::minmax_element(scores.begin(), scores.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  std::vector<double> grid(count);
  if (count == 1 || hi == lo) {
    grid.assign(count, lo);
    return grid;
  }
  for (std::size_t i = 0; i < count; ++i) {
    grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  }
  return grid;
}

// 0/1 loss values of x -> 1[h_a(x) != h_b(x)] for every threshold pair,
// over the given score subset. Rows are (a, b) pairs.
Matrix pair_loss_values(const std::vector<double>& grid,
                        const std::vector<double>& subset_scores) {
  const std::size_t g = grid.size();
  Matrix values(g * g, subset_scores.size());
  for (std::size_t a = 0; a < g; ++a) {
    for (std::size_t b = 0; b < g; ++b) {
      auto row = values.row(a * g + b);
      for (std::size_t i = 0; i < subset_scores.size(); ++i) {
        const bool ha = subset_scores[i] >= grid[a];
        const bool hb = subset_scores[i] >= grid[b];
        row[i] = ha == hb ? 0.0 : 1.0;
      }
    }
  }
  return values;
}

}  // namespace

FairnessAuditReport fairness_bound_audit(const std::vector<double>& scores,
                                         const std::vector<Label>& labels,
                                         const std::vector<Group>& groups,
                                         std::size_t k, const AuditConfig& config) {
  if (scores.size() != labels.size() || scores.size() != groups.size()) {
    throw ShapeError("fairness_bound_audit: input length mismatch");
  }
  if (config.confidence_delta <= 0.0 || config.confidence_delta >= 1.0) {
    throw ConfigError("confidence_delta must lie in (0, 1)");
  }
  if (config.threshold_grid < 2) throw ConfigError("threshold_grid must be >= 2");

  FairnessAuditReport rep;
  rep.k = k;
  rep.confidence_delta = config.confidence_delta;

  std::vector<double> scores_u, scores_p;
  std::vector<Label> labels_u, labels_p;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (groups[i] == Group::Protected) {
      scores_p.push_back(scores[i]);
      labels_p.push_back(labels[i]);
    } else {
      scores_u.push_back(scores[i]);
      labels_u.push_back(labels[i]);
    }
  }
  rep.m = scores_u.size();
  rep.n = scores_p.size();
  if (rep.m == 0 || rep.n == 0) {
    throw DegenerateDataError("fairness_bound_audit: both groups must be non-empty");
  }

  // Detector h: flag the global top-k; its threshold is the k-th score.
  const RankingResult ranking = rank_descending(scores, k);
  rep.threshold = k > 0 ? scores[ranking.order[k - 1]]
                        : std::numeric_limits<double>::infinity();
  auto risk_of_flags = [&](const std::vector<Label>& group_labels,
                           const std::vector<double>& group_scores,
                           auto&& flagged) {
    double wrong = 0.0;
    for (std::size_t i = 0; i < group_labels.size(); ++i) {
      const bool positive = flagged(group_scores[i], i);
      const bool anomaly = group_labels[i] == Label::Anomaly;
      if (positive != anomaly) wrong += 1.0;
    }
    return wrong / static_cast<double>(group_labels.size());
  };
  // Evaluate h via the global flags to honour the ranking's tie-breaking.
  {
    double wrong_u = 0.0, wrong_p = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const bool positive = ranking.top_k_flags[i];
      const bool anomaly = labels[i] == Label::Anomaly;
      if (positive != anomaly) {
        (groups[i] == Group::Protected ? wrong_p : wrong_u) += 1.0;
      }
    }
    rep.risk_unprotected = wrong_u / static_cast<double>(rep.m);
    rep.risk_protected = wrong_p / static_cast<double>(rep.n);
  }
  rep.risk_difference = std::fabs(rep.risk_protected - rep.risk_unprotected);

  // TV term between the two groups' binned score distributions.
  {
    const auto [lo_it, hi_it] = std::minmax_element(scores.begin(), scores.end());
    const double width = (*hi_it - *lo_it) / static_cast<double>(config.tv_bins);
    Matrix su(scores_u.size(), 1, std::vector<double>(scores_u));
    Matrix sp(scores_p.size(), 1, std::vector<double>(scores_p));
    const Binning binning = width > 0.0 ? Binning::grid(width) : Binning::exact();
    rep.tv_u_p = empirical_tv(su, sp, binning);
  }

  // Best joint hypothesis in the threshold family.
  const std::vector<double> grid = threshold_grid_over(scores, config.threshold_grid);
  {
    double best_joint = std::numeric_limits<double>::infinity();
    for (double t : grid) {
      auto at_least = [t](double s, std::size_t) { return s >= t; };
      const double ru = risk_of_flags(labels_u, scores_u, at_least);
      const double rp = risk_of_flags(labels_p, scores_p, at_least);
      if (ru + rp < best_joint) {
        best_joint = ru + rp;
        rep.joint_risk_unprotected = ru;
        rep.joint_risk_protected = rp;
      }
    }
  }

  // Rademacher complexity of the pairwise 0/1 loss family on each group.
  {
    const Matrix values_u = pair_loss_values(grid, scores_u);
    const Matrix values_p = pair_loss_values(grid, scores_p);
    const RademacherEstimate ru = empirical_rademacher(
        values_u, config.rademacher_trials, derive_seed(config.seed, 1));
    const RademacherEstimate rp = empirical_rademacher(
        values_p, config.rademacher_trials, derive_seed(config.seed, 2));
    rep.rademacher_unprotected = ru.value;
    rep.rademacher_unprotected_stderr = ru.std_error;
    rep.rademacher_protected = rp.value;
    rep.rademacher_protected_stderr = rp.std_error;
  }

  const DivergenceSpec tv_spec = divergence_table(DivergenceName::TV);
  rep.lipschitz = tv_spec.lipschitz_on_unit;

  // Witness-based variational lower bound on D_f(U || P) over score space:
  // shifted threshold indicators map into dom f* of TV.
  {
    std::vector<Witness> witnesses;
    for (double t : grid) {
      witnesses.push_back(Witness{
          "tv-threshold-" + std::to_string(t),
          [t](std::span<const double> row) { return row[0] >= t ? 0.5 : -0.5; }});
    }
    Matrix su(scores_u.size(), 1, std::vector<double>(scores_u));
    Matrix sp(scores_p.size(), 1, std::vector<double>(scores_p));
    rep.df_lower_bound = empirical_f_divergence(su, sp, tv_spec, witnesses);
  }

  const double log_term = std::log(1.0 / config.confidence_delta);
  rep.confidence_term_unprotected =
      2.0 * std::sqrt(log_term / (2.0 * static_cast<double>(rep.m)));
  rep.confidence_term_protected =
      2.0 * std::sqrt(log_term / (2.0 * static_cast<double>(rep.n)));

  rep.rhs_total = rep.tv_u_p + rep.joint_risk_unprotected + rep.joint_risk_protected +
                  4.0 * rep.rademacher_unprotected +
                  2.0 * (rep.lipschitz + 1.0) * rep.rademacher_protected +
                  rep.confidence_term_unprotected + rep.confidence_term_protected;
  rep.holds = rep.risk_difference <= rep.rhs_total + 1e-9;
  return rep;
}

}  // namespace fairad
