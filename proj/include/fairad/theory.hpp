#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "fairad/divergences.hpp"
#include "fairad/matrix.hpp"
#include "fairad/scoring.hpp"

namespace fairad {

/// Assigns each sample row to exactly one cell.
struct Binning {
  enum class Mode { Exact, Grid };
  Mode mode = Mode::Exact;
  double cell_width = 1.0;  // Grid only

  static Binning exact() { return Binning{Mode::Exact, 1.0}; }
  static Binning grid(double width);
};

/// Empirical total variation between the binned sample distributions:
///   1/2 * sum over cells |freq_P(cell) - freq_Q(cell)|.
double empirical_tv(const Matrix& p_samples, const Matrix& q_samples,
                    const Binning& binning);

/// Distance form for sigma. Cosine is the law-of-cosines distance between
/// normalized points, sqrt(2 - 2 cos); LogCosine is the literal
/// sqrt(2 - 2 log cos) variant, defined only for positive cosines.
enum class SigmaForm { Cosine, LogCosine };

struct TvBoundReport {
  double tv_hat = 0.0;
  double delta = 0.0;   // density gap at the best-matched point
  double sigma = 0.0;   // total distance of all points to that point
  double c_u = 0.0;     // max density slope over sample pairs, unprotected
  double c_p = 0.0;
  std::size_t cardinality = 0;  // |X|, number of pooled points
  double bound_rhs = 0.0;       // (|X| delta + (c_u + c_p) sigma) / 2
  double surrogate_fair = 0.0;  // sum of cross-group distances
  double surrogate_unif = 0.0;  // negated within-group distance sums
  double bandwidth_u = 0.0;
  double bandwidth_p = 0.0;
  std::size_t argmin_index = 0;
  bool holds = false;
};

/// Checks tv_hat <= (|X| delta + (c_u + c_p) sigma) / 2 on the pooled,
/// row-normalized representations. Densities come from a Gaussian kernel
/// estimator (Scott bandwidth) normalized over the pooled points; the
/// Lipschitz constants are exact maximum slopes over sample pairs.
TvBoundReport tv_bound_check(const Matrix& z_p, const Matrix& z_u,
                             SigmaForm form = SigmaForm::Cosine);

struct SurrogateLosses {
  double l_fair_prime = 0.0;
  double l_unif_prime = 0.0;
};

/// Distance surrogates of the contrastive terms:
///   l_fair' = sum over cross pairs ||z_u - z_p||
///   l_unif' = -(ordered within-U pair distances + ordered within-P ones)
SurrogateLosses surrogate_losses(const Matrix& z_p, const Matrix& z_u);

struct RademacherEstimate {
  double value = 0.0;
  double std_error = 0.0;  // zero for the exhaustive mode
  bool exhaustive = false;
  std::size_t trials = 0;
};

/// Empirical Rademacher complexity of a finite function family given its
/// value matrix (family x samples): E_sigma sup_r (1/|D|) sum_i sigma_i r_i.
RademacherEstimate rademacher_exhaustive(const Matrix& function_values);
RademacherEstimate rademacher_monte_carlo(const Matrix& function_values,
                                          std::size_t trials, std::uint64_t seed);
/// Exhaustive when |D| <= 12, Monte Carlo otherwise.
RademacherEstimate empirical_rademacher(const Matrix& function_values,
                                        std::size_t trials, std::uint64_t seed);

struct AuditConfig {
  double confidence_delta = 0.05;
  std::size_t threshold_grid = 32;
  std::size_t rademacher_trials = 10000;
  std::size_t tv_bins = 16;
  std::uint64_t seed = 0;
};

/// Every term of the Rademacher fairness bound, named individually.
struct FairnessAuditReport {
  std::size_t m = 0;  // unprotected count
  std::size_t n = 0;  // protected count
  std::size_t k = 0;
  double threshold = 0.0;
  double risk_protected = 0.0;
  double risk_unprotected = 0.0;
  double risk_difference = 0.0;  // |R_P - R_U|, the LHS
  double tv_u_p = 0.0;           // binned TV between group score distributions
  double joint_risk_unprotected = 0.0;  // best family member's risks
  double joint_risk_protected = 0.0;
  double rademacher_unprotected = 0.0;
  double rademacher_unprotected_stderr = 0.0;
  double rademacher_protected = 0.0;
  double rademacher_protected_stderr = 0.0;
  double lipschitz = 1.0;
  double confidence_delta = 0.05;
  double confidence_term_unprotected = 0.0;  // 2 sqrt(log(1/delta) / 2m)
  double confidence_term_protected = 0.0;    // 2 sqrt(log(1/delta) / 2n)
  double df_lower_bound = 0.0;  // witness-based variational estimate
  double rhs_total = 0.0;
  bool holds = false;
};

/// Audits the fairness bound on empirical data: the detector h flags the
/// global top-k scores, the hypothesis family is a grid of score
/// thresholds with 0/1 loss, and the bound's divergence term is the binned
/// TV between the two groups' score distributions.
FairnessAuditReport fairness_bound_audit(const std::vector<double>& scores,
                                         const std::vector<Label>& labels,
                                         const std::vector<Group>& groups,
                                         std::size_t k, const AuditConfig& config);

}  // namespace fairad
