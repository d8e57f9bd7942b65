#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fairad/theory.hpp"
#include "fairad/rng.hpp"
#include "testutil.hpp"

using namespace fairad;
using testutil::matrix_from;

namespace {

Matrix column(const std::vector<double>& values) {
  return Matrix(values.size(), 1, std::vector<double>(values));
}

// Sample matrix realizing exact atom frequencies: `counts[i]` copies of
// atom value i.
Matrix atoms_with_counts(const std::vector<int>& counts) {
  std::vector<double> rows;
  for (std::size_t a = 0; a < counts.size(); ++a) {
    for (int c = 0; c < counts[a]; ++c) rows.push_back(static_cast<double>(a));
  }
  const std::size_t count = rows.size();
  return Matrix(count, 1, std::move(rows));
}

std::vector<double> probabilities(const std::vector<int>& counts) {
  double total = 0.0;
  for (int c : counts) total += c;
  std::vector<double> p;
  for (int c : counts) p.push_back(c / total);
  return p;
}

// Witness output ranges that stay inside each conjugate domain.
std::pair<double, double> safe_range(DivergenceName name) {
  switch (name) {
    case DivergenceName::KL: return {-2.0, 2.0};
    case DivergenceName::ReverseKL: return {-2.0, -0.05};
    case DivergenceName::JS: return {-2.0, 0.6};
    case DivergenceName::PearsonChi2: return {-2.0, 2.0};
    case DivergenceName::TV: return {-0.5, 0.5};
  }
  return {0.0, 0.0};
}

}  // namespace

TEST_CASE("divergence table values") {
  const DivergenceSpec kl = divergence_table(DivergenceName::KL);
  CHECK(kl.conjugate(1.0) == doctest::Approx(1.0));  // exp(0)
  CHECK(kl.f(1.0) == doctest::Approx(0.0));

  for (DivergenceName name : catalogued_divergences()) {
    const DivergenceSpec spec = divergence_table(name);
    CAPTURE(spec.label);
    CHECK(spec.f(1.0) == doctest::Approx(0.0).epsilon(1e-12));
    // Convexity on probe points via second differences.
    for (double x : {0.25, 0.5, 1.0, 2.0, 4.0}) {
      const double h = 1e-4;
      const double second = spec.f(x + h) - 2.0 * spec.f(x) + spec.f(x - h);
      CHECK(second >= -1e-9);
    }
  }

  const DivergenceSpec tv = divergence_table(DivergenceName::TV);
  CHECK(tv.conjugate(0.25) == doctest::Approx(0.25));
  CHECK_THROWS_AS(tv.conjugate(0.75), DomainError);
  CHECK_THROWS_AS(divergence_table("NotADivergence"), LookupError);
  CHECK(divergence_table("KL").name == DivergenceName::KL);
}

TEST_CASE("variational estimate basics") {
  const DivergenceSpec tv = divergence_table(DivergenceName::TV);
  const Matrix same = column({0, 0, 1, 1, 2});
  const std::vector<Witness> witnesses{
      {"zero", [](std::span<const double>) { return 0.0; }},
      {"half-split", [](std::span<const double> x) { return x[0] < 1 ? 0.5 : -0.5; }}};
  // Identical multisets: no witness can separate them.
  CHECK(empirical_f_divergence(same, same, tv, witnesses) <= 1e-9);

  // Disjoint supports with indicator witnesses approach TV = 1.
  const Matrix left = column({0, 0, 0});
  const Matrix right = column({5, 5, 5});
  const std::vector<Witness> indicator{
      {"split", [](std::span<const double> x) { return x[0] < 2.5 ? 0.5 : -0.5; }}};
  CHECK(empirical_f_divergence(left, right, tv, indicator) == doctest::Approx(1.0));

  // Supremum monotonicity: a larger family never lowers the estimate.
  std::vector<Witness> small{indicator};
  std::vector<Witness> large{indicator};
  large.push_back(witnesses[0]);
  large.push_back(witnesses[1]);
  CHECK(empirical_f_divergence(left, right, tv, large) >=
        empirical_f_divergence(left, right, tv, small) - 1e-12);

  // Out-of-domain witness output is rejected by name.
  const std::vector<Witness> bad{
      {"too-big", [](std::span<const double>) { return 2.0; }}};
  CHECK_THROWS_WITH_AS(empirical_f_divergence(left, right, tv, bad),
                       doctest::Contains("too-big"), DomainError);
}

TEST_CASE("variational estimates never exceed the exact discrete divergence") {
  Rng rng(606);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t atom_count = 2 + rng.below(7);  // up to 8 atoms
    std::vector<int> counts_p(atom_count), counts_q(atom_count);
    for (std::size_t a = 0; a < atom_count; ++a) {
      counts_p[a] = 1 + static_cast<int>(rng.below(10));
      counts_q[a] = 1 + static_cast<int>(rng.below(10));
    }
    const Matrix samples_p = atoms_with_counts(counts_p);
    const Matrix samples_q = atoms_with_counts(counts_q);
    const std::vector<double> p = probabilities(counts_p);
    const std::vector<double> q = probabilities(counts_q);

    for (DivergenceName name : catalogued_divergences()) {
      const DivergenceSpec spec = divergence_table(name);
      CAPTURE(spec.label);
      const auto [lo, hi] = safe_range(name);
      std::vector<Witness> witnesses;
      for (int w = 0; w < 8; ++w) {
        std::vector<double> table(atom_count);
        for (double& v : table) v = rng.uniform(lo, hi);
        witnesses.push_back(Witness{
            "w" + std::to_string(w), [table](std::span<const double> x) {
              return table[static_cast<std::size_t>(x[0])];
            }});
      }
      const double exact = exact_discrete_f_divergence(p, q, spec);
      const double estimate =
          empirical_f_divergence(samples_p, samples_q, spec, witnesses);
      CHECK(estimate <= exact + 1e-9);
    }
  }
}

TEST_CASE("TV discrepancy over hypothesis families is dominated by exact TV") {
  // For f = TV with the shift-into-domain convention the discrepancy is
  // |mean_P[l] - mean_Q[l]| which classic TV duality bounds by D_f.
  Rng rng(707);
  const DivergenceSpec tv = divergence_table(DivergenceName::TV);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t atom_count = 2 + rng.below(5);
    std::vector<int> counts_p(atom_count), counts_q(atom_count);
    for (std::size_t a = 0; a < atom_count; ++a) {
      counts_p[a] = 1 + static_cast<int>(rng.below(8));
      counts_q[a] = 1 + static_cast<int>(rng.below(8));
    }
    const std::vector<double> p = probabilities(counts_p);
    const std::vector<double> q = probabilities(counts_q);
    const Matrix samples_p = atoms_with_counts(counts_p);
    const Matrix samples_q = atoms_with_counts(counts_q);

    // 0/1 losses of threshold pairs, shifted into [-1/2, 1/2].
    const std::size_t family = 6;
    Matrix loss_p(family, samples_p.rows());
    Matrix loss_q(family, samples_q.rows());
    for (std::size_t f = 0; f < family; ++f) {
      const double t1 = rng.uniform(0.0, static_cast<double>(atom_count));
      const double t2 = rng.uniform(0.0, static_cast<double>(atom_count));
      auto loss = [t1, t2](double x) {
        return ((x >= t1) != (x >= t2)) ? 0.5 : -0.5;
      };
      for (std::size_t i = 0; i < samples_p.rows(); ++i) {
        loss_p(f, i) = loss(samples_p(i, 0));
      }
      for (std::size_t i = 0; i < samples_q.rows(); ++i) {
        loss_q(f, i) = loss(samples_q(i, 0));
      }
    }
    const double discrepancy = discrepancy_from_values(loss_p, loss_q, tv);
    const double exact = exact_discrete_f_divergence(p, q, tv);
    CHECK(discrepancy <= exact + 1e-9);
  }
}

TEST_CASE("empirical risk inequalities of the joint-hypothesis bound") {
  // Deterministic empirical form of the risk-difference bound for
  // conjugates defined on all of [0, 1] (KL, Pearson): for every h in the
  // family, R_P(h) - R_U(h) <= D^f(U||P) + R_U(h*) + R_P(h*).
  Rng rng(808);
  for (DivergenceName name : {DivergenceName::KL, DivergenceName::PearsonChi2}) {
    const DivergenceSpec spec = divergence_table(name);
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t m = 12 + rng.below(20);
      const std::size_t n = 8 + rng.below(12);
      std::vector<double> scores_u(m), scores_p(n);
      std::vector<int> labels_u(m), labels_p(n);
      for (std::size_t i = 0; i < m; ++i) {
        scores_u[i] = rng.normal();
        labels_u[i] = rng.uniform() < 0.4;
      }
      for (std::size_t i = 0; i < n; ++i) {
        scores_p[i] = rng.normal(0.5, 1.0);
        labels_p[i] = rng.uniform() < 0.4;
      }
      std::vector<double> grid;
      for (int g = -3; g <= 3; ++g) grid.push_back(0.5 * g);

      auto risk = [](const std::vector<double>& scores, const std::vector<int>& labels,
                     double threshold) {
        double wrong = 0.0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
          wrong += static_cast<double>((scores[i] >= threshold) != (labels[i] != 0));
        }
        return wrong / static_cast<double>(scores.size());
      };
      double best_joint = 1e9, joint_u = 0, joint_p = 0;
      for (double t : grid) {
        const double ru = risk(scores_u, labels_u, t);
        const double rp = risk(scores_p, labels_p, t);
        if (ru + rp < best_joint) {
          best_joint = ru + rp;
          joint_u = ru;
          joint_p = rp;
        }
      }
      for (double th : grid) {
        // Family of pairwise losses l(h(x), h'(x)) with h fixed at `th`.
        Matrix loss_u(grid.size(), m), loss_p(grid.size(), n);
        for (std::size_t f = 0; f < grid.size(); ++f) {
          for (std::size_t i = 0; i < m; ++i) {
            loss_u(f, i) = static_cast<double>((scores_u[i] >= th) !=
                                               (scores_u[i] >= grid[f]));
          }
          for (std::size_t i = 0; i < n; ++i) {
            loss_p(f, i) = static_cast<double>((scores_p[i] >= th) !=
                                               (scores_p[i] >= grid[f]));
          }
        }
        const double disc = discrepancy_from_values(loss_u, loss_p, spec);
        const double lhs = risk(scores_p, labels_p, th) - risk(scores_u, labels_u, th);
        CHECK(lhs <= disc + joint_u + joint_p + 1e-9);
      }
    }
  }
}

TEST_CASE("empirical tv") {
  const Binning exact = Binning::exact();
  CHECK(empirical_tv(column({1, 2, 3}), column({1, 2, 3}), exact) ==
        doctest::Approx(0.0));
  CHECK(empirical_tv(column({0, 0}), column({5, 5, 5}), exact) == doctest::Approx(1.0));
  // P = {a,a,b}, Q = {a,b,b} -> 1/3.
  CHECK(empirical_tv(column({0, 0, 1}), column({0, 1, 1}), exact) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK_THROWS_AS(empirical_tv(Matrix(0, 1), column({1.0}), exact),
                  DegenerateDataError);
  // Grid binning groups nearby values.
  CHECK(empirical_tv(column({0.1, 0.2}), column({0.15, 0.25}), Binning::grid(1.0)) ==
        doctest::Approx(0.0));
}

TEST_CASE("tv bound check") {
  SUBCASE("all points identical collapses to the delta term") {
    Matrix z(4, 2);
    for (std::size_t i = 0; i < 4; ++i) {
      z(i, 0) = 1.0;
      z(i, 1) = 0.0;
    }
    const TvBoundReport rep = tv_bound_check(z, z);
    CHECK(rep.sigma == doctest::Approx(0.0));
    CHECK(rep.tv_hat == doctest::Approx(0.0));
    CHECK(rep.bound_rhs == doctest::Approx(0.5 * rep.cardinality * rep.delta));
    CHECK(rep.holds);
  }
  SUBCASE("two disjoint clusters have large tv and a larger bound") {
    Rng rng(17);
    Matrix z_p(6, 3), z_u(8, 3);
    for (std::size_t i = 0; i < 6; ++i) {
      z_p(i, 0) = 1.0 + 0.01 * rng.normal();
      z_p(i, 1) = 0.01 * rng.normal();
      z_p(i, 2) = 0.01 * rng.normal();
    }
    for (std::size_t i = 0; i < 8; ++i) {
      z_u(i, 0) = -1.0 + 0.01 * rng.normal();
      z_u(i, 1) = 0.01 * rng.normal();
      z_u(i, 2) = 0.01 * rng.normal();
    }
    const TvBoundReport rep = tv_bound_check(z_p, z_u);
    CHECK(rep.tv_hat > 0.8);
    CHECK(rep.bound_rhs >= rep.tv_hat);
    CHECK(rep.holds);
  }
  SUBCASE("inequality holds on randomized configurations") {
    Rng rng(23);
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t n = 2 + rng.below(9);
      const std::size_t m = 2 + rng.below(9);
      const std::size_t r = 2 + rng.below(3);
      Matrix z_p(n, r), z_u(m, r);
      for (double& v : z_p.data()) v = rng.normal();
      for (double& v : z_u.data()) v = rng.normal();
      const TvBoundReport rep = tv_bound_check(z_p, z_u);
      CHECK(rep.tv_hat <= rep.bound_rhs + 1e-9);
      CHECK(rep.holds);
    }
  }
  SUBCASE("sigma never exceeds the fair surrogate when the groups share a point") {
    // The argument pinning sigma under l_fair' assumes the minimizing
    // point is common to both groups; build configurations that satisfy it.
    Rng rng(29);
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t n = 2 + rng.below(5);
      const std::size_t m = 2 + rng.below(5);
      Matrix z_p(n, 3), z_u(m, 3);
      for (double& v : z_p.data()) v = rng.normal();
      for (double& v : z_u.data()) v = rng.normal();
      // Make the first row of each group the same unit vector.
      z_p(0, 0) = 1.0; z_p(0, 1) = 0.0; z_p(0, 2) = 0.0;
      z_u(0, 0) = 1.0; z_u(0, 1) = 0.0; z_u(0, 2) = 0.0;
      const TvBoundReport rep = tv_bound_check(z_p, z_u);
      // sigma is measured from the argmin; when that argmin is the shared
      // point, every distance pairs off against a cross-group term.
      if (rep.argmin_index == 0 || rep.argmin_index == m) {
        CHECK(rep.sigma <= rep.surrogate_fair + 1e-9);
      }
    }
  }
  SUBCASE("log-cosine form is defined for tight clusters and larger") {
    Matrix z(3, 2);
    z(0, 0) = 1.0; z(0, 1) = 0.0;
    z(1, 0) = 0.9; z(1, 1) = 0.1;
    z(2, 0) = 0.95; z(2, 1) = 0.05;
    const TvBoundReport cos_form = tv_bound_check(z, z, SigmaForm::Cosine);
    const TvBoundReport log_form = tv_bound_check(z, z, SigmaForm::LogCosine);
    CHECK(log_form.sigma >= cos_form.sigma);
    Matrix opposed(2, 2);
    opposed(0, 0) = 1.0; opposed(1, 0) = -1.0;
    CHECK_THROWS_AS(tv_bound_check(opposed, opposed, SigmaForm::LogCosine),
                    DomainError);
  }
}

TEST_CASE("surrogate losses") {
  SUBCASE("identical points") {
    Matrix z(3, 2);
    for (std::size_t i = 0; i < 3; ++i) z(i, 0) = 1.0;
    const SurrogateLosses s = surrogate_losses(z, z);
    CHECK(s.l_fair_prime == doctest::Approx(0.0));
    CHECK(s.l_unif_prime == doctest::Approx(0.0));
  }
  SUBCASE("unit basis vectors") {
    const Matrix u = matrix_from(1, 2, {1, 0});
    const Matrix p = matrix_from(1, 2, {0, 1});
    const SurrogateLosses s = surrogate_losses(p, u);
    CHECK(s.l_fair_prime == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  }
  SUBCASE("3+3 random points against brute force") {
    Rng rng(31);
    Matrix z_p(3, 4), z_u(3, 4);
    for (double& v : z_p.data()) v = rng.normal();
    for (double& v : z_u.data()) v = rng.normal();
    const SurrogateLosses s = surrogate_losses(z_p, z_u);
    auto dist = [&](const Matrix& a, std::size_t i, const Matrix& b, std::size_t j) {
      double d2 = 0.0;
      for (std::size_t t = 0; t < 4; ++t) {
        d2 += (a(i, t) - b(j, t)) * (a(i, t) - b(j, t));
      }
      return std::sqrt(d2);
    };
    double fair = 0.0, unif = 0.0;
    for (std::size_t j = 0; j < 3; ++j) {
      for (std::size_t k = 0; k < 3; ++k) {
        fair += dist(z_u, j, z_p, k);
        if (j != k) {
          unif += dist(z_u, j, z_u, k) + dist(z_p, j, z_p, k);
        }
      }
    }
    CHECK(s.l_fair_prime == doctest::Approx(fair).epsilon(1e-12));
    CHECK(s.l_unif_prime == doctest::Approx(-unif).epsilon(1e-12));
  }
}

TEST_CASE("rademacher estimates") {
  SUBCASE("constant-zero family is exactly zero") {
    Matrix values(1, 6);
    CHECK(rademacher_exhaustive(values).value == doctest::Approx(0.0));
    CHECK(rademacher_monte_carlo(values, 500, 1).value == doctest::Approx(0.0));
  }
  SUBCASE("two-constant family matches the exhaustive oracle") {
    const double c = 0.8;
    for (std::size_t d : {4ULL, 8ULL, 12ULL}) {
      Matrix values(2, d);
      for (std::size_t i = 0; i < d; ++i) {
        values(0, i) = c;
        values(1, i) = -c;
      }
      const RademacherEstimate exact = rademacher_exhaustive(values);
      // Closed form: c * E|mean sigma|.
      double expected = 0.0;
      const std::size_t total = std::size_t{1} << d;
      for (std::size_t mask = 0; mask < total; ++mask) {
        const int pop = __builtin_popcountll(mask);
        expected += std::fabs(2.0 * pop - static_cast<double>(d)) /
                    static_cast<double>(d);
      }
      expected *= c / static_cast<double>(total);
      CHECK(exact.value == doctest::Approx(expected).epsilon(1e-12));

      const RademacherEstimate mc = rademacher_monte_carlo(values, 20000, 99);
      CHECK(std::fabs(mc.value - exact.value) <= 3.0 * mc.std_error + 1e-12);
    }
  }
  SUBCASE("auto mode picks exhaustive for small sample counts") {
    Matrix values(2, 10);
    for (std::size_t i = 0; i < 10; ++i) {
      values(0, i) = 1.0;
      values(1, i) = -1.0;
    }
    CHECK(empirical_rademacher(values, 100, 0).exhaustive);
    Matrix wide(2, 14);
    CHECK_FALSE(empirical_rademacher(wide, 100, 0).exhaustive);
  }
  SUBCASE("growing the family never shrinks the estimate") {
    Rng rng(111);
    Matrix small(3, 8), large(6, 8);
    for (double& v : large.data()) v = rng.normal();
    for (std::size_t f = 0; f < 3; ++f) {
      for (std::size_t i = 0; i < 8; ++i) small(f, i) = large(f, i);
    }
    CHECK(rademacher_exhaustive(large).value >=
          rademacher_exhaustive(small).value - 1e-12);
  }
  SUBCASE("empty family is rejected") {
    CHECK_THROWS_AS(rademacher_exhaustive(Matrix(0, 4)), LookupError);
  }
}

TEST_CASE("fairness bound audit") {
  Rng rng(999);
  SUBCASE("group-identical data with a group-blind detector") {
    const std::size_t per_group = 100;
    std::vector<double> scores;
    std::vector<Label> labels;
    std::vector<Group> groups;
    for (std::size_t i = 0; i < per_group; ++i) {
      // Identical score/label sequences in both groups.
      const double s = rng.normal();
      const Label l = rng.uniform() < 0.2 ? Label::Anomaly : Label::Normal;
      scores.push_back(s);
      labels.push_back(l);
      groups.push_back(Group::Unprotected);
      scores.push_back(s);
      labels.push_back(l);
      groups.push_back(Group::Protected);
    }
    AuditConfig cfg;
    cfg.seed = 5;
    const FairnessAuditReport rep =
        fairness_bound_audit(scores, labels, groups, 40, cfg);
    CHECK(rep.risk_difference < 0.05);
    CHECK(rep.holds);
  }
  SUBCASE("inequality holds across random imbalanced cases") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      Rng local(seed * 13 + 1);
      std::vector<double> scores;
      std::vector<Label> labels;
      std::vector<Group> groups;
      for (std::size_t i = 0; i < 200; ++i) {
        const bool anomaly = local.uniform() < 0.15;
        scores.push_back(local.normal(anomaly ? 1.5 : 0.0, 1.0));
        labels.push_back(anomaly ? Label::Anomaly : Label::Normal);
        groups.push_back(Group::Unprotected);
      }
      for (std::size_t i = 0; i < 50; ++i) {
        const bool anomaly = local.uniform() < 0.15;
        scores.push_back(local.normal(anomaly ? 2.0 : 0.5, 1.2));
        labels.push_back(anomaly ? Label::Anomaly : Label::Normal);
        groups.push_back(Group::Protected);
      }
      AuditConfig cfg;
      cfg.seed = seed;
      const FairnessAuditReport rep =
          fairness_bound_audit(scores, labels, groups, 40, cfg);
      CHECK(rep.holds);
      CHECK(rep.df_lower_bound <= rep.tv_u_p + 1e-9);
    }
  }
  SUBCASE("shrinking delta strictly raises the bound") {
    std::vector<double> scores;
    std::vector<Label> labels;
    std::vector<Group> groups;
    for (std::size_t i = 0; i < 60; ++i) {
      scores.push_back(rng.normal());
      labels.push_back(i % 5 == 0 ? Label::Anomaly : Label::Normal);
      groups.push_back(i % 4 == 0 ? Group::Protected : Group::Unprotected);
    }
    AuditConfig loose, tight;
    loose.confidence_delta = 0.1;
    tight.confidence_delta = 0.01;
    const double rhs_loose =
        fairness_bound_audit(scores, labels, groups, 12, loose).rhs_total;
    const double rhs_tight =
        fairness_bound_audit(scores, labels, groups, 12, tight).rhs_total;
    CHECK(rhs_tight > rhs_loose);
  }
}
