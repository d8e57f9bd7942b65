#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fairad/losses.hpp"
#include "fairad/nn.hpp"
#include "fairad/rng.hpp"
#include "testutil.hpp"

using namespace fairad;
using testutil::matrix_from;

TEST_CASE("cosine_sim_exp closed forms") {
  const std::vector<double> e1{1.0, 0.0};
  const std::vector<double> e2{0.0, 1.0};
  const std::vector<double> diag{1.0, 1.0};
  CHECK(cosine_sim_exp(e1, e1) == doctest::Approx(M_E).epsilon(1e-12));
  CHECK(cosine_sim_exp(e1, e2) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cosine_sim_exp(diag, e1) ==
        doctest::Approx(std::exp(1.0 / std::sqrt(2.0))).epsilon(1e-12));
  const std::vector<double> zero{0.0, 0.0};
  CHECK_THROWS_AS(cosine_sim_exp(zero, e1), DegenerateVectorError);
}

TEST_CASE("simclr on two identical unit rows with identity augmentation") {
  const Matrix z = matrix_from(2, 2, {1, 0, 1, 0});
  CHECK(loss_simclr(z, z) == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
  CHECK_THROWS_AS(loss_simclr(matrix_from(1, 2, {1, 0}), matrix_from(1, 2, {1, 0})),
                  InsufficientGroupError);
}

TEST_CASE("simclr is invariant to positive rescaling of a row") {
  Rng rng(5);
  Matrix z(4, 3), z_pos(4, 3);
  for (double& v : z.data()) v = rng.normal();
  for (double& v : z_pos.data()) v = rng.normal();
  const double base = loss_simclr(z, z_pos);
  Matrix scaled = z;
  for (std::size_t j = 0; j < 3; ++j) scaled(2, j) *= 17.5;
  CHECK(loss_simclr(scaled, z_pos) == doctest::Approx(base).epsilon(1e-9));
}

TEST_CASE("loss_fac closed forms") {
  SUBCASE("all rows identical unit vector") {
    const Matrix z_p = matrix_from(2, 2, {1, 0, 1, 0});
    const Matrix z_u = matrix_from(3, 2, {1, 0, 1, 0, 1, 0});
    const FacTerms t = loss_fac(z_p, z_u);
    CHECK(t.l_fair == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(t.l_unif == doctest::Approx(1.0 + std::log(2.0)).epsilon(1e-12));
    CHECK(t.l_fac == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }
  SUBCASE("unit basis 2+2") {
    const Matrix z_p = matrix_from(2, 2, {1, 0, 0, 1});
    const Matrix z_u = matrix_from(2, 2, {1, 0, 0, 1});
    const FacTerms t = loss_fac(z_p, z_u);
    const double expected_fair = -std::log((2.0 * M_E + 2.0) / 4.0);
    CHECK(t.l_fair == doctest::Approx(expected_fair).epsilon(1e-12));
    CHECK(t.l_unif == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(t.l_fac == doctest::Approx(expected_fair + std::log(2.0)).epsilon(1e-12));
    CHECK(t.l_fac == doctest::Approx(0.0730).epsilon(1e-3));
  }
}

TEST_CASE("loss_fac rejects undersized groups and zero rows") {
  const Matrix one = matrix_from(1, 2, {1, 0});
  const Matrix two = matrix_from(2, 2, {1, 0, 0, 1});
  CHECK_THROWS_AS(loss_fac(one, two), InsufficientGroupError);
  Matrix with_zero = two;
  with_zero(1, 0) = 0.0;
  with_zero(1, 1) = 0.0;
  CHECK_THROWS_AS(loss_fac(with_zero, two), DegenerateVectorError);
}

TEST_CASE("loss_fac is invariant to per-row positive rescaling") {
  Rng rng(12);
  Matrix z_p(3, 4), z_u(5, 4);
  for (double& v : z_p.data()) v = rng.normal();
  for (double& v : z_u.data()) v = rng.normal();
  const FacTerms base = loss_fac(z_p, z_u);
  Matrix sp = z_p, su = z_u;
  for (std::size_t i = 0; i < sp.rows(); ++i) {
    const double c = rng.uniform(0.1, 10.0);
    for (std::size_t j = 0; j < sp.cols(); ++j) sp(i, j) *= c;
  }
  for (std::size_t i = 0; i < su.rows(); ++i) {
    const double c = rng.uniform(0.1, 10.0);
    for (std::size_t j = 0; j < su.cols(); ++j) su(i, j) *= c;
  }
  const FacTerms scaled = loss_fac(sp, su);
  CHECK(scaled.l_fair == doctest::Approx(base.l_fair).epsilon(1e-9));
  CHECK(scaled.l_unif == doctest::Approx(base.l_unif).epsilon(1e-9));
  CHECK(scaled.l_fac == doctest::Approx(base.l_fac).epsilon(1e-9));
}

TEST_CASE("monotonicity probes on 2+2 batches") {
  // Raising a cross-group cosine lowers l_fac; lowering a within-group
  // cosine lowers l_unif.
  auto make_pair = [](double angle_p2) {
    return matrix_from(2, 2,
                       {1.0, 0.0, std::cos(angle_p2), std::sin(angle_p2)});
  };
  const Matrix z_u = matrix_from(2, 2, {0.0, 1.0, 1.0, 1.0});
  const FacTerms far_apart = loss_fac(make_pair(3.0), z_u);
  const FacTerms closer = loss_fac(make_pair(1.2), z_u);
  // Moving the second P row toward the U rows raises cross similarity.
  CHECK(closer.l_fair < far_apart.l_fair);

  const Matrix z_p = matrix_from(2, 2, {1.0, 0.0, 0.0, 1.0});
  const FacTerms tight = loss_fac(z_p, matrix_from(2, 2, {1, 0.0, 0.9, 0.1}));
  const FacTerms spread = loss_fac(z_p, matrix_from(2, 2, {1, 0.0, -0.3, 0.9}));
  CHECK(spread.l_unif < tight.l_unif);
}

TEST_CASE("loss_rec_split examples and oracle") {
  SUBCASE("perfect reconstruction") {
    const Matrix x = matrix_from(2, 2, {1, 2, 3, 4});
    const RecSplit s = loss_rec_split(x, x, x, x);
    CHECK(s.l_p == 0.0);
    CHECK(s.l_u == 0.0);
  }
  SUBCASE("unit displacement") {
    const Matrix x_p = matrix_from(1, 2, {1, 0});
    const Matrix r_p = matrix_from(1, 2, {0, 0});
    const Matrix x_u = matrix_from(1, 2, {0, 0});
    const RecSplit s = loss_rec_split(x_p, r_p, x_u, x_u);
    CHECK(s.l_p == doctest::Approx(1.0));
  }
  SUBCASE("random 5-row batch against a per-row oracle") {
    Rng rng(31);
    Matrix x_p(5, 3), r_p(5, 3), x_u(5, 3), r_u(5, 3);
    for (double& v : x_p.data()) v = rng.normal();
    for (double& v : r_p.data()) v = rng.normal();
    for (double& v : x_u.data()) v = rng.normal();
    for (double& v : r_u.data()) v = rng.normal();
    const RecSplit s = loss_rec_split(x_p, r_p, x_u, r_u);
    double manual_p = 0.0, manual_u = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
      for (std::size_t j = 0; j < 3; ++j) {
        manual_p += (x_p(i, j) - r_p(i, j)) * (x_p(i, j) - r_p(i, j));
        manual_u += (x_u(i, j) - r_u(i, j)) * (x_u(i, j) - r_u(i, j));
      }
    }
    CHECK(s.l_p == doctest::Approx(manual_p).epsilon(1e-12));
    CHECK(s.l_u == doctest::Approx(manual_u).epsilon(1e-12));
  }
  CHECK_THROWS_AS(
      loss_rec_split(Matrix(2, 2), Matrix(2, 3), Matrix(1, 2), Matrix(1, 2)),
      ShapeError);
}

namespace {

GroupBatch batch_from(Matrix x_p, Matrix r_p, Matrix x_u, Matrix r_u) {
  GroupBatch b;
  b.x_p = std::move(x_p);
  b.recon_p = std::move(r_p);
  b.x_u = std::move(x_u);
  b.recon_u = std::move(r_u);
  return b;
}

}  // namespace

TEST_CASE("epsilon symmetry gives one half") {
  // Mirrored groups: identical gains on both sides.
  const Matrix x = matrix_from(2, 2, {1, 0, -1, 0});
  const Matrix r = matrix_from(2, 2, {0.5, 0, -0.5, 0});
  for (EpsilonEstimator est :
       {EpsilonEstimator::Loss1, EpsilonEstimator::Loss2, EpsilonEstimator::Loss3,
        EpsilonEstimator::Loss4}) {
    CAPTURE(epsilon_estimator_name(est));
    const double eps = epsilon_weight(batch_from(x, r, x, r), est);
    CHECK(eps == doctest::Approx(0.5).epsilon(1e-12));
  }
}

TEST_CASE("unprotected at its unfitted level forces epsilon to zero") {
  // Constant reconstructions equal their own mean, so L0_U == L_U exactly
  // under loss1; the protected side is perfectly fitted with spread inputs.
  const Matrix x_u = matrix_from(3, 2, {1, 0, 2, 0, 3, 0});
  const Matrix r_u = matrix_from(3, 2, {7, 7, 7, 7, 7, 7});
  const Matrix x_p = matrix_from(2, 2, {1, 1, -1, -1});
  const Matrix r_p = x_p;
  const double eps =
      epsilon_weight(batch_from(x_p, r_p, x_u, r_u), EpsilonEstimator::Loss1);
  CHECK(eps == doctest::Approx(0.0));
}

TEST_CASE("degenerate denominator falls back to the group proportion") {
  std::vector<std::string> warnings;
  set_warning_sink([&warnings](const std::string& w) { warnings.push_back(w); });
  // Constant recon on both sides and perfectly centered inputs: zero gains.
  const Matrix x_p = matrix_from(2, 2, {1, 0, -1, 0});
  const Matrix r_p = matrix_from(2, 2, {0, 0, 0, 0});
  const Matrix x_u = matrix_from(3, 2, {2, 0, -2, 0, 0, 0});
  const Matrix r_u = matrix_from(3, 2, {0, 0, 0, 0, 0, 0});
  const double eps =
      epsilon_weight(batch_from(x_p, r_p, x_u, r_u), EpsilonEstimator::Loss1);
  CHECK(eps == doctest::Approx(2.0 / 5.0).epsilon(1e-12));
  CHECK(warnings.size() == 1);
  set_warning_sink(nullptr);
  set_warning_sink([](const std::string&) {});
}

TEST_CASE("epsilon is clamped to the unit interval on all inputs") {
  Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(5);
    const std::size_t m = 1 + rng.below(5);
    Matrix x_p(n, 3), r_p(n, 3), x_u(m, 3), r_u(m, 3);
    for (double& v : x_p.data()) v = rng.normal(0, 3);
    for (double& v : r_p.data()) v = rng.normal(0, 3);
    for (double& v : x_u.data()) v = rng.normal(0, 3);
    for (double& v : r_u.data()) v = rng.normal(0, 3);
    for (EpsilonEstimator est :
         {EpsilonEstimator::Loss1, EpsilonEstimator::Loss2, EpsilonEstimator::Loss3,
          EpsilonEstimator::Loss4}) {
      const double eps = epsilon_weight(batch_from(x_p, r_p, x_u, r_u), est);
      CHECK(eps >= 0.0);
      CHECK(eps <= 1.0);
    }
  }
}

TEST_CASE("loss1 epsilon is strictly interior for imperfect reconstructions") {
  Rng rng(88);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 3 + rng.below(4);
    const std::size_t m = 3 + rng.below(4);
    Matrix x_p(n, 2), x_u(m, 2);
    for (double& v : x_p.data()) v = rng.normal();
    for (double& v : x_u.data()) v = rng.normal();
    // Reconstructions shrink toward the group mean: imperfect but closer
    // than the constant-mean baseline on every row.
    auto shrink = [](const Matrix& x) {
      std::vector<double> mean(x.cols(), 0.0);
      for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t j = 0; j < x.cols(); ++j) mean[j] += x(i, j);
      }
      for (double& v : mean) v /= static_cast<double>(x.rows());
      Matrix r = x;
      for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t j = 0; j < x.cols(); ++j) {
          r(i, j) = mean[j] + 0.7 * (x(i, j) - mean[j]);
        }
      }
      return r;
    };
    const double eps = epsilon_weight(
        batch_from(x_p, shrink(x_p), x_u, shrink(x_u)), EpsilonEstimator::Loss1);
    CHECK(eps > 0.0);
    CHECK(eps < 1.0);
  }
}

TEST_CASE("planted-delta scenarios keep loss1 epsilon inside the proper interval") {
  Rng rng(404);
  int valid = 0;
  while (valid < 25) {
    const std::size_t per = 3;
    // Build the four subgroups with controlled reconstruction quality:
    // normals nearly fitted, anomalies partially fitted.
    auto build = [&](double center, double spread, double fit) {
      Matrix x(per, 2), r(per, 2);
      for (std::size_t i = 0; i < per; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
          x(i, j) = center + spread * rng.normal();
        }
      }
      std::vector<double> mean(2, 0.0);
      for (std::size_t i = 0; i < per; ++i) {
        for (std::size_t j = 0; j < 2; ++j) mean[j] += x(i, j) / per;
      }
      for (std::size_t i = 0; i < per; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
          r(i, j) = mean[j] + fit * (x(i, j) - mean[j]);
        }
      }
      return std::make_pair(x, r);
    };
    const double fit_normal = 0.9 + 0.08 * rng.uniform();
    const double fit_anomaly = 0.3 + 0.3 * rng.uniform();
    auto [x_un, r_un] = build(0.0, 1.0, fit_normal);
    auto [x_ua, r_ua] = build(4.0, 1.5, fit_anomaly);
    auto [x_pn, r_pn] = build(1.0, 1.0, fit_normal);
    auto [x_pa, r_pa] = build(5.0, 1.5, fit_anomaly);

    // Oracle: per-subgroup current loss and loss1 baseline, brute force.
    auto subgroup_losses = [](const Matrix& x, const Matrix& r,
                              const std::vector<double>& group_recon_mean) {
      double current = 0.0, baseline = 0.0;
      for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t j = 0; j < x.cols(); ++j) {
          current += (x(i, j) - r(i, j)) * (x(i, j) - r(i, j));
          baseline += (x(i, j) - group_recon_mean[j]) * (x(i, j) - group_recon_mean[j]);
        }
      }
      return std::make_pair(current, baseline);
    };
    auto group_mean = [](const Matrix& a, const Matrix& b) {
      std::vector<double> mean(a.cols(), 0.0);
      for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) mean[j] += a(i, j);
      }
      for (std::size_t i = 0; i < b.rows(); ++i) {
        for (std::size_t j = 0; j < b.cols(); ++j) mean[j] += b(i, j);
      }
      for (double& v : mean) v /= static_cast<double>(a.rows() + b.rows());
      return mean;
    };
    const std::vector<double> mean_u = group_mean(r_un, r_ua);
    const std::vector<double> mean_p = group_mean(r_pn, r_pa);
    const auto [l1_un, l0_un] = subgroup_losses(x_un, r_un, mean_u);
    const auto [l1_ua, l0_ua] = subgroup_losses(x_ua, r_ua, mean_u);
    const auto [l1_pn, l0_pn] = subgroup_losses(x_pn, r_pn, mean_p);
    const auto [l1_pa, l0_pa] = subgroup_losses(x_pa, r_pa, mean_p);
    const double d_un = l0_un - l1_un, d_ua = l0_ua - l1_ua;
    const double d_pn = l0_pn - l1_pn, d_pa = l0_pa - l1_pa;
    // Lemma preconditions: positive gains everywhere, normals gain more.
    if (d_un <= 0 || d_ua <= 0 || d_pn <= 0 || d_pa <= 0) continue;
    if (d_un <= d_ua || d_pn <= d_pa) continue;
    ++valid;

    const double lower = d_ua / (d_ua + d_pn);
    const double upper = d_un / (d_un + d_pa);
    REQUIRE(lower < upper);

    // Assemble the two-group batch: U = UN + UA rows, P = PN + PA rows.
    auto stack = [](const Matrix& a, const Matrix& b) {
      Matrix out(a.rows() + b.rows(), a.cols());
      for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = a(i, j);
      }
      for (std::size_t i = 0; i < b.rows(); ++i) {
        for (std::size_t j = 0; j < b.cols(); ++j) out(a.rows() + i, j) = b(i, j);
      }
      return out;
    };
    const double eps = epsilon_weight(
        batch_from(stack(x_pn, x_pa), stack(r_pn, r_pa), stack(x_un, x_ua),
                   stack(r_un, r_ua)),
        EpsilonEstimator::Loss1);
    CHECK(eps > lower);
    CHECK(eps < upper);
  }
}

TEST_CASE("loss_overall composition") {
  SUBCASE("alpha zero leaves only the weighted reconstruction") {
    const Matrix x = matrix_from(2, 2, {1, 0, 0, 1});
    const Matrix r = matrix_from(2, 2, {0.5, 0, 0, 0.5});
    GroupBatch b = batch_from(x, r, x, r);
    const LossReport rep = loss_overall(b, 0.0, EpsilonEstimator::Loss1);
    CHECK(rep.total ==
          doctest::Approx((1 - rep.epsilon) * rep.l_u + rep.epsilon * rep.l_p)
              .epsilon(1e-12));
    CHECK(rep.l_fac == 0.0);
  }
  SUBCASE("perfect reconstruction with identical unit representations") {
    const Matrix x = matrix_from(2, 2, {1, 0, 0, 1});
    GroupBatch b = batch_from(x, x, x, x);
    b.z_p = matrix_from(2, 2, {1, 0, 1, 0});
    b.z_u = matrix_from(2, 2, {1, 0, 1, 0});
    const double alpha = 0.7;
    const LossReport rep = loss_overall(b, alpha, EpsilonEstimator::Loss1);
    CHECK(rep.total == doctest::Approx(alpha * std::log(2.0)).epsilon(1e-9));
  }
  SUBCASE("report invariant holds to 1e-12") {
    Rng rng(3);
    Matrix x_p(3, 2), r_p(3, 2), x_u(4, 2), r_u(4, 2);
    for (double& v : x_p.data()) v = rng.normal();
    for (double& v : r_p.data()) v = rng.normal();
    for (double& v : x_u.data()) v = rng.normal();
    for (double& v : r_u.data()) v = rng.normal();
    GroupBatch b = batch_from(x_p, r_p, x_u, r_u);
    b.z_p = r_p;
    b.z_u = r_u;
    const LossReport rep = loss_overall(b, 1.3, EpsilonEstimator::Loss2);
    CHECK(rep.l_rec ==
          doctest::Approx((1 - rep.epsilon) * rep.l_u + rep.epsilon * rep.l_p)
              .epsilon(1e-12));
    CHECK(rep.total == doctest::Approx(rep.l_rec + rep.alpha * rep.l_fac).epsilon(1e-12));
    CHECK(rep.epsilon >= 0.0);
    CHECK(rep.epsilon <= 1.0);
  }
}

TEST_CASE("gradients of the full objective match finite differences") {
  // Two-group batch through a seeded model; epsilon frozen, as in training.
  for (auto [d, r] : {std::pair<std::size_t, std::size_t>{3, 2}, {8, 4}}) {
    CAPTURE(d);
    AutoencoderModel model = make_autoencoder(d, {r}, 2024, Activation::Tanh);
    Rng rng(55);
    Matrix x(6, d);
    for (double& v : x.data()) v = rng.normal();
    const std::vector<std::size_t> idx_p{0, 1, 2};
    const std::vector<std::size_t> idx_u{3, 4, 5};
    const Matrix x_p = x.gather_rows(idx_p);
    const Matrix x_u = x.gather_rows(idx_u);
    const double alpha = 0.8;
    const double eps = 0.37;  // frozen, not differentiated

    auto objective = [&]() {
      const ForwardCache cache = forward(model, x);
      const Matrix recon_p = cache.recon().gather_rows(idx_p);
      const Matrix recon_u = cache.recon().gather_rows(idx_u);
      const RecSplit rec = loss_rec_split(x_p, recon_p, x_u, recon_u);
      const FacTerms fac =
          loss_fac(cache.z().gather_rows(idx_p), cache.z().gather_rows(idx_u));
      return (1.0 - eps) * rec.l_u + eps * rec.l_p + alpha * fac.l_fac;
    };

    const ForwardCache cache = forward(model, x);
    Matrix d_recon(6, d);
    for (std::size_t i = 0; i < 6; ++i) {
      const double w = i < 3 ? eps : 1.0 - eps;
      for (std::size_t j = 0; j < d; ++j) {
        d_recon(i, j) = 2.0 * w * (cache.recon()(i, j) - x(i, j));
      }
    }
    const FacGradients fg = loss_fac_with_grad(cache.z().gather_rows(idx_p),
                                               cache.z().gather_rows(idx_u));
    Matrix d_z(6, r);
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < r; ++j) {
        d_z(i, j) = alpha * (fg.d_fair_z_p(i, j) + fg.d_unif_z_p(i, j));
        d_z(3 + i, j) = alpha * (fg.d_fair_z_u(i, j) + fg.d_unif_z_u(i, j));
      }
    }
    const GradientSet analytic = backward(model, cache, d_recon, d_z);
    const std::vector<double> fd = testutil::finite_difference_gradient(model, objective);
    const double err = testutil::max_relative_error(testutil::flatten(analytic), fd);
    CHECK(err < 1e-4);
  }
}

TEST_CASE("simclr gradients match finite differences through the encoder") {
  AutoencoderModel model = make_autoencoder(4, {3}, 7, Activation::Tanh);
  Rng rng(66);
  Matrix x(5, 4), x_aug(5, 4);
  for (double& v : x.data()) v = rng.normal();
  x_aug = x;
  for (double& v : x_aug.data()) v += 0.05 * rng.normal();

  auto objective = [&]() {
    const ForwardCache c1 = forward(model, x);
    const ForwardCache c2 = forward(model, x_aug);
    return loss_simclr(c1.z(), c2.z());
  };

  const ForwardCache c1 = forward(model, x);
  const ForwardCache c2 = forward(model, x_aug);
  const SimclrGradients sg = loss_simclr_with_grad(c1.z(), c2.z());
  GradientSet analytic = backward(model, c1, Matrix(), sg.d_z);
  analytic += backward(model, c2, Matrix(), sg.d_z_pos);
  const std::vector<double> fd = testutil::finite_difference_gradient(model, objective);
  CHECK(testutil::max_relative_error(testutil::flatten(analytic), fd) < 1e-4);
}
