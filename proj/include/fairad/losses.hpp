#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>

#include "fairad/matrix.hpp"

namespace fairad {

/// Sink for non-fatal warnings (degenerate epsilon denominator etc.).
/// Defaults to stderr; tests may capture it.
void set_warning_sink(std::function<void(const std::string&)> sink);
void emit_warning(const std::string& message);

/// exp(cosine(a, b)); range [1/e, e]. Throws DegenerateVectorError on a
/// zero-norm input.
double cosine_sim_exp(std::span<const double> a, std::span<const double> b);

/// Representations and reconstruction pairs for a two-group batch.
/// Protected group P has n rows, unprotected group U has m rows.
struct GroupBatch {
  Matrix z_p, z_u;          // n x r, m x r
  Matrix x_p, x_u;          // n x d, m x d
  Matrix recon_p, recon_u;  // n x d, m x d

  std::size_t n() const { return x_p.rows() > 0 ? x_p.rows() : z_p.rows(); }
  std::size_t m() const { return x_u.rows() > 0 ? x_u.rows() : z_u.rows(); }
};

struct FacTerms {
  double l_fair = 0.0;
  double l_unif = 0.0;
  double l_fac = 0.0;
};

/// Fairness-aware contrastive loss:
///   l_fair = -log( mean over cross-group pairs of sim )
///   l_unif =  log( mean within-U pair sim + mean within-P pair sim )
/// Both groups need at least two rows.
FacTerms loss_fac(const Matrix& z_p, const Matrix& z_u);

/// loss_fac plus exact gradients w.r.t. every representation row, split by
/// term so ablation variants can drop one side.
struct FacGradients {
  FacTerms terms;
  Matrix d_fair_z_p, d_fair_z_u;
  Matrix d_unif_z_p, d_unif_z_u;
};
FacGradients loss_fac_with_grad(const Matrix& z_p, const Matrix& z_u);

/// SimCLR-style contrastive loss over a batch with one positive per row:
///   -sum_j log( sim(z_j, z_pos_j) / sum_k sim(z_j, z_k) )
/// The denominator runs over all batch rows including j itself.
double loss_simclr(const Matrix& z, const Matrix& z_pos);

struct SimclrGradients {
  double value = 0.0;
  Matrix d_z, d_z_pos;
};
SimclrGradients loss_simclr_with_grad(const Matrix& z, const Matrix& z_pos);

struct RecSplit {
  double l_p = 0.0;
  double l_u = 0.0;
};

/// Group-split reconstruction loss, plain sums of squared residuals.
RecSplit loss_rec_split(const Matrix& x_p, const Matrix& recon_p, const Matrix& x_u,
                        const Matrix& recon_u);

enum class EpsilonEstimator { Loss1, Loss2, Loss3, Loss4 };

std::string epsilon_estimator_name(EpsilonEstimator e);
EpsilonEstimator epsilon_estimator_from_name(const std::string& name);

/// Re-balancing weight, clamped to [0, 1]:
///   eps = (L0_U - L_U) / ((L0_U - L_U) + (L0_P - L_P))
/// with the unfitted baseline L0 per estimator variant. Falls back to the
/// group proportion n/(n+m) (with a warning) when the denominator is tiny.
double epsilon_weight(const GroupBatch& batch, EpsilonEstimator estimator);

struct LossReport {
  double l_u = 0.0;
  double l_p = 0.0;
  double epsilon = 0.0;  // NaN when the variant does not rebalance
  double l_fair = 0.0;
  double l_unif = 0.0;
  double l_fac = 0.0;
  double l_rec = 0.0;
  double alpha = 0.0;
  double total = 0.0;
};

/// Full objective: total = (1-eps) L_U + eps L_P + alpha * L_FAC.
/// Epsilon is a derived weight, never differentiated through.
LossReport loss_overall(const GroupBatch& batch, double alpha,
                        EpsilonEstimator estimator);
LossReport loss_overall_fixed_eps(const GroupBatch& batch, double alpha,
                                  double epsilon);

}  // namespace fairad
