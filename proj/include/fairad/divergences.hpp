#pragma once

#include <functional>
#include <string>
#include <vector>

#include "fairad/matrix.hpp"

namespace fairad {

enum class DivergenceName { KL, ReverseKL, JS, PearsonChi2, TV };

/// An f-divergence: generator f (convex, f(1) = 0), Fenchel conjugate f*
/// with its domain, and the Lipschitz constant of f* on [0, 1] when that
/// interval lies inside the domain.
struct DivergenceSpec {
  DivergenceName name;
  std::string label;
  std::function<double(double)> f;       // defined for x > 0 (limit at 0 where finite)
  std::function<double(double)> f_star;  // defined on the conjugate domain
  std::function<bool(double)> in_domain;
  std::string domain_description;
  bool unit_interval_in_domain = false;
  double lipschitz_on_unit = 0.0;  // meaningful only when the above is true

  /// f* with a domain check; throws DomainError.
  double conjugate(double t) const;
};

DivergenceSpec divergence_table(DivergenceName name);
DivergenceSpec divergence_table(const std::string& name);
std::vector<DivergenceName> catalogued_divergences();
std::string divergence_name(DivergenceName name);

/// A bounded witness function T mapping sample rows into dom f*.
struct Witness {
  std::string name;
  std::function<double(std::span<const double>)> fn;
};

/// Variational lower bound on D_f(P||Q):
///   max over witnesses of mean_P[T] - mean_Q[f*(T)].
/// Throws DomainError naming the witness whose output leaves dom f*.
double empirical_f_divergence(const Matrix& p_samples, const Matrix& q_samples,
                              const DivergenceSpec& spec,
                              const std::vector<Witness>& witnesses);

/// Hypothesis-restricted discrepancy between P and Q:
///   sup over rows of | mean(loss_p row) - mean(f*(loss_q row)) |
/// Row i of each matrix holds the values of one candidate function
/// x -> loss(h(x), h'(x)) over that distribution's samples.
double discrepancy_from_values(const Matrix& loss_values_p, const Matrix& loss_values_q,
                               const DivergenceSpec& spec);

/// Exact D_f between discrete distributions given atom probabilities.
/// p must vanish wherever q does.
double exact_discrete_f_divergence(const std::vector<double>& p,
                                   const std::vector<double>& q,
                                   const DivergenceSpec& spec);

}  // namespace fairad
