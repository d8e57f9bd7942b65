#include "fairad/losses.hpp"

#include <cmath>
#include <iostream>
#include <utility>

namespace fairad {

namespace {

std::function<void(const std::string&)>& warning_sink() {
  static std::function<void(const std::string&)> sink =
      [](const std::string& msg) { std::cerr << "[fairad] warning: " << msg << "\n"; };
  return sink;
}

}  // namespace

void set_warning_sink(std::function<void(const std::string&)> sink) {
  warning_sink() = std::move(sink);
}

void emit_warning(const std::string& message) {
  if (warning_sink()) warning_sink()(message);
}

double cosine_sim_exp(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("cosine_sim_exp: length mismatch");
  const double na = norm(a);
  const double nb = norm(b);
  if (na == 0.0 || nb == 0.0) {
    throw DegenerateVectorError("cosine_sim_exp: zero-norm vector");
  }
  return std::exp(dot(a, b) / (na * nb));
}

namespace {

// Rows scaled to unit norm; zero-norm rows are rejected.
struct NormalizedRows {
  Matrix unit;                // same shape as input
  std::vector<double> norms;  // original row norms
};

NormalizedRows normalize_rows(const Matrix& z, const char* which) {
  NormalizedRows out;
  out.unit = z;
  out.norms.resize(z.rows());
  for (std::size_t i = 0; i < z.rows(); ++i) {
    auto row = out.unit.row(i);
    const double n = norm(row);
    if (n == 0.0) {
      throw DegenerateVectorError(std::string("zero-norm representation row ") +
                                  std::to_string(i) + " in group " + which);
    }
    out.norms[i] = n;
    for (double& v : row) v /= n;
  }
  return out;
}

void exp_inplace(Matrix& m) {
  for (double& v : m.data()) v = std::exp(v);
}

double sum_all(const Matrix& m) {
  double s = 0.0;
  for (double v : m.data()) s += v;
  return s;
}

double trace(const Matrix& m) {
  double s = 0.0;
  for (std::size_t i = 0; i < std::min(m.rows(), m.cols()); ++i) s += m(i, i);
  return s;
}

// Pairwise exp-cosine block between two sets of unit rows.
struct SimBlock {
  Matrix cos;  // a.rows x b.rows
  Matrix sim;  // exp(cos)
};

SimBlock sim_block(const Matrix& unit_a, const Matrix& unit_b) {
  SimBlock blk;
  blk.cos = matmul_nt(unit_a, unit_b);
  blk.sim = blk.cos;
  exp_inplace(blk.sim);
  return blk;
}

}  // namespace

FacTerms loss_fac(const Matrix& z_p, const Matrix& z_u) {
  const std::size_t n = z_p.rows();
  const std::size_t m = z_u.rows();
  if (n < 2 || m < 2) {
    throw InsufficientGroupError("loss_fac needs at least 2 rows per group, got n=" +
                                 std::to_string(n) + " m=" + std::to_string(m));
  }
  if (z_p.cols() != z_u.cols()) throw ShapeError("loss_fac: representation width mismatch");

  auto np = normalize_rows(z_p, "P");
  auto nu = normalize_rows(z_u, "U");

  const SimBlock cross = sim_block(np.unit, nu.unit);
  const SimBlock within_u = sim_block(nu.unit, nu.unit);
  const SimBlock within_p = sim_block(np.unit, np.unit);

  const double mean_cross = sum_all(cross.sim) / static_cast<double>(n * m);
  const double mean_u =
      (sum_all(within_u.sim) - trace(within_u.sim)) / static_cast<double>(m * (m - 1));
  const double mean_p =
      (sum_all(within_p.sim) - trace(within_p.sim)) / static_cast<double>(n * (n - 1));

  FacTerms t;
  t.l_fair = -std::log(mean_cross);
  t.l_unif = std::log(mean_u + mean_p);
  t.l_fac = t.l_fair + t.l_unif;
  return t;
}

namespace {

// Gradient of sum_k w_jk * exp(cos(z_j, z_k)) w.r.t. z_j, assembled from
//   weighted_dir_j = sum_k w_jk s_jk * unit_k
//   weighted_cos_j = sum_k w_jk s_jk * cos_jk
// as (weighted_dir_j - weighted_cos_j * unit_j) / norm_j.
void accumulate_pair_grad(Matrix& d_z, double coeff, const Matrix& weighted_dir,
                          const std::vector<double>& weighted_cos, const Matrix& unit,
                          const std::vector<double>& norms) {
  for (std::size_t i = 0; i < d_z.rows(); ++i) {
    auto out = d_z.row(i);
    auto dir = weighted_dir.row(i);
    auto u = unit.row(i);
    const double scale = coeff / norms[i];
    for (std::size_t j = 0; j < out.size(); ++j) {
      out[j] += scale * (dir[j] - weighted_cos[i] * u[j]);
    }
  }
}

std::vector<double> rowsum_hadamard(const Matrix& a, const Matrix& b) {
  std::vector<double> out(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ra = a.row(i);
    auto rb = b.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < ra.size(); ++j) s += ra[j] * rb[j];
    out[i] = s;
  }
  return out;
}

std::vector<double> colsum_hadamard(const Matrix& a, const Matrix& b) {
  std::vector<double> out(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ra = a.row(i);
    auto rb = b.row(i);
    for (std::size_t j = 0; j < ra.size(); ++j) out[j] += ra[j] * rb[j];
  }
  return out;
}

}  // namespace

FacGradients loss_fac_with_grad(const Matrix& z_p, const Matrix& z_u) {
  const std::size_t n = z_p.rows();
  const std::size_t m = z_u.rows();
  if (n < 2 || m < 2) {
    throw InsufficientGroupError("loss_fac needs at least 2 rows per group, got n=" +
                                 std::to_string(n) + " m=" + std::to_string(m));
  }
  if (z_p.cols() != z_u.cols()) throw ShapeError("loss_fac: representation width mismatch");

  auto np = normalize_rows(z_p, "P");
  auto nu = normalize_rows(z_u, "U");

  const SimBlock cross = sim_block(np.unit, nu.unit);      // n x m
  const SimBlock within_u = sim_block(nu.unit, nu.unit);   // m x m
  const SimBlock within_p = sim_block(np.unit, np.unit);   // n x n

  const double cross_sum = sum_all(cross.sim);
  const double sum_u = sum_all(within_u.sim) - trace(within_u.sim);
  const double sum_p = sum_all(within_p.sim) - trace(within_p.sim);
  const double mean_cross = cross_sum / static_cast<double>(n * m);
  const double mean_u = sum_u / static_cast<double>(m * (m - 1));
  const double mean_p = sum_p / static_cast<double>(n * (n - 1));
  const double unif_total = mean_u + mean_p;

  FacGradients g;
  g.terms.l_fair = -std::log(mean_cross);
  g.terms.l_unif = std::log(unif_total);
  g.terms.l_fac = g.terms.l_fair + g.terms.l_unif;
  g.d_fair_z_p = Matrix(n, z_p.cols());
  g.d_fair_z_u = Matrix(m, z_u.cols());
  g.d_unif_z_p = Matrix(n, z_p.cols());
  g.d_unif_z_u = Matrix(m, z_u.cols());

  // l_fair = -log(cross_sum) + const.
  {
    const Matrix dir_p = matmul(cross.sim, nu.unit);     // n x r
    const Matrix dir_u = matmul_tn(cross.sim, np.unit);  // m x r
    const std::vector<double> wc_p = rowsum_hadamard(cross.sim, cross.cos);
    const std::vector<double> wc_u = colsum_hadamard(cross.sim, cross.cos);
    accumulate_pair_grad(g.d_fair_z_p, -1.0 / cross_sum, dir_p, wc_p, np.unit, np.norms);
    accumulate_pair_grad(g.d_fair_z_u, -1.0 / cross_sum, dir_u, wc_u, nu.unit, nu.norms);
  }

  // l_unif = log(sum_u / (m(m-1)) + sum_p / (n(n-1))). A row appears as
  // both ends of each ordered pair, doubling its contribution.
  {
    Matrix dir_u = matmul(within_u.sim, nu.unit);  // includes the diagonal term
    std::vector<double> wc_u = rowsum_hadamard(within_u.sim, within_u.cos);
    for (std::size_t i = 0; i < m; ++i) {
      const double diag_sim = within_u.sim(i, i);
      const double diag_cos = within_u.cos(i, i);
      auto dir = dir_u.row(i);
      auto u = nu.unit.row(i);
      for (std::size_t j = 0; j < dir.size(); ++j) dir[j] -= diag_sim * u[j];
      wc_u[i] -= diag_sim * diag_cos;
    }
    const double coeff_u =
        2.0 / (unif_total * static_cast<double>(m * (m - 1)));
    accumulate_pair_grad(g.d_unif_z_u, coeff_u, dir_u, wc_u, nu.unit, nu.norms);

    Matrix dir_p = matmul(within_p.sim, np.unit);
    std::vector<double> wc_p = rowsum_hadamard(within_p.sim, within_p.cos);
    for (std::size_t i = 0; i < n; ++i) {
      const double diag_sim = within_p.sim(i, i);
      const double diag_cos = within_p.cos(i, i);
      auto dir = dir_p.row(i);
      auto u = np.unit.row(i);
      for (std::size_t j = 0; j < dir.size(); ++j) dir[j] -= diag_sim * u[j];
      wc_p[i] -= diag_sim * diag_cos;
    }
    const double coeff_p =
        2.0 / (unif_total * static_cast<double>(n * (n - 1)));
    accumulate_pair_grad(g.d_unif_z_p, coeff_p, dir_p, wc_p, np.unit, np.norms);
  }

  return g;
}

double loss_simclr(const Matrix& z, const Matrix& z_pos) {
  return loss_simclr_with_grad(z, z_pos).value;
}

SimclrGradients loss_simclr_with_grad(const Matrix& z, const Matrix& z_pos) {
  const std::size_t b = z.rows();
  if (b < 2) {
    throw InsufficientGroupError("loss_simclr needs at least 2 rows, got " +
                                 std::to_string(b));
  }
  if (!z.same_shape(z_pos)) throw ShapeError("loss_simclr: positives shape mismatch");

  auto nz = normalize_rows(z, "batch");
  auto npos = normalize_rows(z_pos, "positives");

  const SimBlock block = sim_block(nz.unit, nz.unit);  // b x b, includes diagonal
  std::vector<double> denom(b, 0.0);
  for (std::size_t i = 0; i < b; ++i) {
    auto row = block.sim.row(i);
    double s = 0.0;
    for (double v : row) s += v;
    denom[i] = s;
  }

  // cos(z_j, z_pos_j); log sim is the cosine itself.
  std::vector<double> pos_cos(b, 0.0);
  for (std::size_t i = 0; i < b; ++i) pos_cos[i] = dot(nz.unit.row(i), npos.unit.row(i));

  SimclrGradients out;
  out.value = 0.0;
  for (std::size_t i = 0; i < b; ++i) out.value += std::log(denom[i]) - pos_cos[i];

  // W = diag(1/denom) * sim.
  Matrix w = block.sim;
  for (std::size_t i = 0; i < b; ++i) {
    auto row = w.row(i);
    for (double& v : row) v /= denom[i];
  }

  const Matrix dir_own = matmul(w, nz.unit);      // from each row's own denominator
  const Matrix dir_other = matmul_tn(w, nz.unit); // from appearing in other denominators
  const std::vector<double> wc_own = rowsum_hadamard(w, block.cos);
  const std::vector<double> wc_other = colsum_hadamard(w, block.cos);

  out.d_z = Matrix(b, z.cols());
  out.d_z_pos = Matrix(b, z.cols());
  accumulate_pair_grad(out.d_z, 1.0, dir_own, wc_own, nz.unit, nz.norms);
  accumulate_pair_grad(out.d_z, 1.0, dir_other, wc_other, nz.unit, nz.norms);
  for (std::size_t i = 0; i < b; ++i) {
    auto dz = out.d_z.row(i);
    auto dpos = out.d_z_pos.row(i);
    auto u = nz.unit.row(i);
    auto upos = npos.unit.row(i);
    for (std::size_t j = 0; j < dz.size(); ++j) {
      dz[j] -= (upos[j] - pos_cos[i] * u[j]) / nz.norms[i];
      dpos[j] = -(u[j] - pos_cos[i] * upos[j]) / npos.norms[i];
    }
  }
  return out;
}

RecSplit loss_rec_split(const Matrix& x_p, const Matrix& recon_p, const Matrix& x_u,
                        const Matrix& recon_u) {
  if (!x_p.same_shape(recon_p) || !x_u.same_shape(recon_u)) {
    throw ShapeError("loss_rec_split: reconstruction shape mismatch");
  }
  RecSplit s;
  s.l_p = (x_p - recon_p).squared_norm();
  s.l_u = (x_u - recon_u).squared_norm();
  return s;
}

std::string epsilon_estimator_name(EpsilonEstimator e) {
  switch (e) {
    case EpsilonEstimator::Loss1: return "loss1";
    case EpsilonEstimator::Loss2: return "loss2";
    case EpsilonEstimator::Loss3: return "loss3";
    case EpsilonEstimator::Loss4: return "loss4";
  }
  throw LookupError("unknown epsilon estimator enum value");
}

EpsilonEstimator epsilon_estimator_from_name(const std::string& name) {
  if (name == "loss1") return EpsilonEstimator::Loss1;
  if (name == "loss2") return EpsilonEstimator::Loss2;
  if (name == "loss3") return EpsilonEstimator::Loss3;
  if (name == "loss4") return EpsilonEstimator::Loss4;
  throw LookupError("unknown epsilon estimator: " + name);
}

namespace {

std::vector<double> column_mean(const Matrix& m) {
  std::vector<double> mean(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto row = m.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) mean[j] += row[j];
  }
  for (double& v : mean) v /= static_cast<double>(m.rows());
  return mean;
}

double sum_sq_dist_to(const Matrix& rows, const std::vector<double>& center) {
  double s = 0.0;
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    auto row = rows.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      const double d = row[j] - center[j];
      s += d * d;
    }
  }
  return s;
}

// Unfitted-model baseline loss for one group. Group means are used
// throughout, matching the loss1 definition.
double unfitted_baseline(const Matrix& x, const Matrix& recon, EpsilonEstimator est) {
  switch (est) {
    case EpsilonEstimator::Loss1:
      return sum_sq_dist_to(x, column_mean(recon));
    case EpsilonEstimator::Loss2:
      return x.squared_norm();
    case EpsilonEstimator::Loss3:
      return sum_sq_dist_to(recon, column_mean(x));
    case EpsilonEstimator::Loss4:
      return sum_sq_dist_to(x, column_mean(x));
  }
  throw LookupError("unknown epsilon estimator enum value");
}

}  // namespace

double epsilon_weight(const GroupBatch& batch, EpsilonEstimator estimator) {
  const std::size_t n = batch.x_p.rows();
  const std::size_t m = batch.x_u.rows();
  if (n < 1 || m < 1) {
    throw InsufficientGroupError("epsilon_weight needs at least one row per group");
  }
  if (!batch.x_p.same_shape(batch.recon_p) || !batch.x_u.same_shape(batch.recon_u)) {
    throw ShapeError("epsilon_weight: reconstruction shape mismatch");
  }
  const RecSplit current =
      loss_rec_split(batch.x_p, batch.recon_p, batch.x_u, batch.recon_u);
  const double l0_u = unfitted_baseline(batch.x_u, batch.recon_u, estimator);
  const double l0_p = unfitted_baseline(batch.x_p, batch.recon_p, estimator);
  const double gain_u = l0_u - current.l_u;
  const double gain_p = l0_p - current.l_p;
  const double den = gain_u + gain_p;
  if (std::fabs(den) < 1e-12) {
    const double fallback =
        static_cast<double>(n) / static_cast<double>(n + m);
    emit_warning("epsilon denominator below 1e-12; falling back to group proportion " +
                 std::to_string(fallback));
    return fallback;
  }
  const double eps = gain_u / den;
  return std::min(1.0, std::max(0.0, eps));
}

LossReport loss_overall(const GroupBatch& batch, double alpha,
                        EpsilonEstimator estimator) {
  return loss_overall_fixed_eps(batch, alpha, epsilon_weight(batch, estimator));
}

LossReport loss_overall_fixed_eps(const GroupBatch& batch, double alpha,
                                  double epsilon) {
  if (alpha < 0.0) throw ConfigError("alpha must be non-negative");
  if (epsilon < 0.0 || epsilon > 1.0) throw ConfigError("epsilon must be in [0, 1]");
  LossReport report;
  const RecSplit rec =
      loss_rec_split(batch.x_p, batch.recon_p, batch.x_u, batch.recon_u);
  report.l_p = rec.l_p;
  report.l_u = rec.l_u;
  report.epsilon = epsilon;
  report.l_rec = (1.0 - epsilon) * rec.l_u + epsilon * rec.l_p;
  report.alpha = alpha;
  if (alpha > 0.0) {
    const FacTerms fac = loss_fac(batch.z_p, batch.z_u);
    report.l_fair = fac.l_fair;
    report.l_unif = fac.l_unif;
    report.l_fac = fac.l_fac;
  }
  report.total = report.l_rec + alpha * report.l_fac;
  if (!std::isfinite(report.total)) {
    throw NumericError("loss_overall produced a non-finite total");
  }
  return report;
}

}  // namespace fairad
