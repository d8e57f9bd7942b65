#include "fairad/divergences.hpp"

#include <cmath>
#include <limits>

namespace fairad {

double DivergenceSpec::conjugate(double t) const {
  if (!in_domain(t)) {
    throw DomainError(label + " conjugate undefined at t=" + std::to_string(t) +
                      "; domain is " + domain_description);
  }
  return f_star(t);
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

DivergenceSpec make_kl() {
  DivergenceSpec s;
  s.name = DivergenceName::KL;
  s.label = "KL";
  s.f = [](double x) { return x == 0.0 ? 0.0 : x * std::log(x); };
  s.f_star = [](double t) { return std::exp(t - 1.0); };
  s.in_domain = [](double) { return true; };
  s.domain_description = "(-inf, inf)";
  s.unit_interval_in_domain = true;
  s.lipschitz_on_unit = 1.0;  // sup of exp(t-1) on [0,1]
  return s;
}

DivergenceSpec make_reverse_kl() {
  DivergenceSpec s;
  s.name = DivergenceName::ReverseKL;
  s.label = "ReverseKL";
  s.f = [](double x) { return x == 0.0 ? kInf : -std::log(x); };
  s.f_star = [](double t) { return -1.0 - std::log(-t); };
  s.in_domain = [](double t) { return t < 0.0; };
  s.domain_description = "(-inf, 0)";
  s.unit_interval_in_domain = false;
  return s;
}

DivergenceSpec make_js() {
  DivergenceSpec s;
  s.name = DivergenceName::JS;
  s.label = "JS";
  s.f = [](double x) {
    const double xlogx = x == 0.0 ? 0.0 : x * std::log(x);
    return -(x + 1.0) * std::log((1.0 + x) / 2.0) + xlogx;
  };
  s.f_star = [](double t) { return -std::log(2.0 - std::exp(t)); };
  s.in_domain = [](double t) { return t < std::log(2.0); };
  s.domain_description = "(-inf, log 2)";
  s.unit_interval_in_domain = false;
  return s;
}

DivergenceSpec make_pearson() {
  DivergenceSpec s;
  s.name = DivergenceName::PearsonChi2;
  s.label = "PearsonChi2";
  s.f = [](double x) { return (x - 1.0) * (x - 1.0); };
  s.f_star = [](double t) { return 0.25 * t * t + t; };
  s.in_domain = [](double) { return true; };
  s.domain_description = "(-inf, inf)";
  s.unit_interval_in_domain = true;
  s.lipschitz_on_unit = 1.5;  // sup of |t/2 + 1| on [0,1]
  return s;
}

DivergenceSpec make_tv() {
  DivergenceSpec s;
  s.name = DivergenceName::TV;
  s.label = "TV";
  s.f = [](double x) { return 0.5 * std::fabs(x - 1.0); };
  s.f_star = [](double t) { return t; };
  s.in_domain = [](double t) { return t >= -0.5 && t <= 0.5; };
  s.domain_description = "[-1/2, 1/2]";
  s.unit_interval_in_domain = false;
  s.lipschitz_on_unit = 1.0;  // f* is the identity on its domain
  return s;
}

}  // namespace

DivergenceSpec divergence_table(DivergenceName name) {
  switch (name) {
    case DivergenceName::KL: return make_kl();
    case DivergenceName::ReverseKL: return make_reverse_kl();
    case DivergenceName::JS: return make_js();
    case DivergenceName::PearsonChi2: return make_pearson();
    case DivergenceName::TV: return make_tv();
  }
  throw LookupError("unknown divergence enum value");
}

DivergenceSpec divergence_table(const std::string& name) {
  for (DivergenceName d : catalogued_divergences()) {
    DivergenceSpec s = divergence_table(d);
    if (s.label == name) return s;
  }
  throw LookupError("unknown divergence: " + name);
}

std::vector<DivergenceName> catalogued_divergences() {
  return {DivergenceName::KL, DivergenceName::ReverseKL, DivergenceName::JS,
          DivergenceName::PearsonChi2, DivergenceName::TV};
}

std::string divergence_name(DivergenceName name) {
  return divergence_table(name).label;
}

double empirical_f_divergence(const Matrix& p_samples, const Matrix& q_samples,
                              const DivergenceSpec& spec,
                              const std::vector<Witness>& witnesses) {
  if (p_samples.rows() == 0 || q_samples.rows() == 0) {
    throw DegenerateDataError("empirical_f_divergence: empty sample set");
  }
  if (witnesses.empty()) {
    throw LookupError("empirical_f_divergence: empty witness family");
  }
  double best = -kInf;
  for (const Witness& w : witnesses) {
    double mean_p = 0.0;
    for (std::size_t i = 0; i < p_samples.rows(); ++i) {
      const double t = w.fn(p_samples.row(i));
      if (!spec.in_domain(t)) {
        throw DomainError("witness '" + w.name + "' output " + std::to_string(t) +
                          " outside dom f* of " + spec.label);
      }
      mean_p += t;
    }
    mean_p /= static_cast<double>(p_samples.rows());
    double mean_q = 0.0;
    for (std::size_t i = 0; i < q_samples.rows(); ++i) {
      const double t = w.fn(q_samples.row(i));
      if (!spec.in_domain(t)) {
        throw DomainError("witness '" + w.name + "' output " + std::to_string(t) +
                          " outside dom f* of " + spec.label);
      }
      mean_q += spec.f_star(t);
    }
    mean_q /= static_cast<double>(q_samples.rows());
    best = std::max(best, mean_p - mean_q);
  }
  return best;
}

double discrepancy_from_values(const Matrix& loss_values_p, const Matrix& loss_values_q,
                               const DivergenceSpec& spec) {
  if (loss_values_p.rows() != loss_values_q.rows()) {
    throw ShapeError("discrepancy: family sizes differ between the two sides");
  }
  if (loss_values_p.rows() == 0) {
    throw LookupError("discrepancy: empty hypothesis family");
  }
  double best = 0.0;
  for (std::size_t r = 0; r < loss_values_p.rows(); ++r) {
    auto row_p = loss_values_p.row(r);
    auto row_q = loss_values_q.row(r);
    double mean_p = 0.0;
    for (double v : row_p) mean_p += v;
    mean_p /= static_cast<double>(row_p.size());
    double mean_q = 0.0;
    for (double v : row_q) mean_q += spec.conjugate(v);
    mean_q /= static_cast<double>(row_q.size());
    best = std::max(best, std::fabs(mean_p - mean_q));
  }
  return best;
}

double exact_discrete_f_divergence(const std::vector<double>& p,
                                   const std::vector<double>& q,
                                   const DivergenceSpec& spec) {
  if (p.size() != q.size()) throw ShapeError("discrete divergence: size mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (q[i] == 0.0) {
      if (p[i] != 0.0) {
        throw DomainError("exact_discrete_f_divergence: p not absolutely continuous");
      }
      continue;
    }
    total += q[i] * spec.f(p[i] / q[i]);
  }
  return total;
}

}  // namespace fairad
