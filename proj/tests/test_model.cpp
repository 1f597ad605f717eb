#include "scm/model.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

namespace {

// Small two-cadre model over three features: first two drive assignment,
// last two drive prediction.
scm::CadreParams two_cadre_params() {
  scm::CadreParams p;
  p.centers.resize(2, 2);
  p.centers << 0.0, 1.0,
               0.0, 1.0;
  p.d.resize(2);
  p.d << 1.0, 0.5;
  p.weights.resize(2, 2);
  p.weights << 1.0, -1.0,
               0.0, 2.0;
  p.intercepts.resize(2);
  p.intercepts << 0.0, 1.0;
  p.sigma2 = 1.0;
  p.cadre_feature_idx = {0, 1};
  p.target_feature_idx = {1, 2};
  return p;
}

scm::CadreParams random_params(int p_total, int m, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  scm::CadreParams params;
  params.cadre_feature_idx = scm::all_feature_indices(p_total);
  params.target_feature_idx = scm::all_feature_indices(p_total);
  params.centers.resize(p_total, m);
  params.weights.resize(p_total, m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < p_total; ++i) {
      params.centers(i, j) = gauss(rng);
      params.weights(i, j) = gauss(rng);
    }
  params.d.resize(p_total);
  for (int i = 0; i < p_total; ++i) params.d(i) = gauss(rng);
  params.intercepts.resize(m);
  for (int j = 0; j < m; ++j) params.intercepts(j) = gauss(rng);
  params.sigma2 = 1.0;
  return params;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("seminorm_sq matches hand values and degenerates correctly") {
  scm::Vector x(2), c(2), d(2);
  x << 1.0, 2.0;
  c << 0.0, 0.0;
  d << 1.0, -2.0;
  // |1|*1^2 + |-2|*2^2 = 9; negative d acts through its absolute value.
  CHECK(scm::seminorm_sq(x, c, d) == doctest::Approx(9.0).epsilon(1e-15));
  CHECK(scm::seminorm_sq(x, x, d) == 0.0);
  CHECK(scm::seminorm_sq(x, c, scm::Vector::Zero(2)) == 0.0);

  scm::Vector short_d(1);
  short_d << 1.0;
  CHECK_THROWS_AS(scm::seminorm_sq(x, c, short_d), scm::Error);
}

TEST_CASE("membership is a probability vector with the documented edge cases") {
  scm::CadreParams p = two_cadre_params();
  scm::Vector x(3);
  x << 0.2, 0.4, -1.0;

  scm::Vector g = scm::membership(x, p, 1.0);
  CHECK(g.size() == 2);
  CHECK(g.minCoeff() > 0.0);
  CHECK(std::abs(g.sum() - 1.0) < 1e-12);

  // Single cadre: probability mass is forced.
  scm::CadreParams single = p;
  single.centers = p.centers.col(0);
  single.weights = p.weights.col(0);
  single.intercepts = p.intercepts.head(1);
  CHECK(scm::membership(x, single, 1.0)(0) == 1.0);

  // d = 0 makes every distance zero: uniform membership.
  scm::CadreParams flat = p;
  flat.d.setZero();
  g = scm::membership(x, flat, 1.0);
  CHECK(g(0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(g(1) == doctest::Approx(0.5).epsilon(1e-15));

  // Equidistant centers split membership evenly.
  scm::CadreParams sym = p;
  sym.centers << -1.0, 1.0,
                  0.0, 0.0;
  scm::Vector origin(3);
  origin << 0.0, 0.0, 5.0;
  g = scm::membership(origin, sym, 2.0);
  CHECK(g(0) == doctest::Approx(0.5).epsilon(1e-14));

  // Sharp gamma pins membership to the local center.
  scm::CadreParams sharp = p;
  sharp.centers << 0.0, 10.0,
                   0.0, 10.0;
  scm::Vector at_first(3);
  at_first << 0.0, 0.0, 0.0;
  g = scm::membership(at_first, sharp, 10.0);
  CHECK(g(0) > 0.999);
}

TEST_CASE("membership survives distances that would overflow a naive softmax") {
  scm::CadreParams p = two_cadre_params();
  p.centers << 0.0, 1e4,
               0.0, 1e4;
  scm::Vector x(3);
  x << 0.0, 0.0, 0.0;
  const scm::Vector g = scm::membership(x, p, 100.0);
  CHECK(std::isfinite(g(0)));
  CHECK(std::abs(g.sum() - 1.0) < 1e-12);
  CHECK(g(0) > 0.999999);
}

TEST_CASE("membership sums to one over 1000 random draws") {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> gauss(0.0, 2.0);
  std::uniform_int_distribution<int> pick_m(1, 5);
  std::uniform_real_distribution<double> pick_gamma(0.1, 8.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const int m = pick_m(rng);
    scm::CadreParams params = random_params(4, m, rng);
    scm::Vector x(4);
    for (int i = 0; i < 4; ++i) x(i) = gauss(rng);
    const scm::Vector g = scm::membership(x, params, pick_gamma(rng));
    CHECK(std::abs(g.sum() - 1.0) < 1e-12);
    CHECK(g.minCoeff() >= 0.0);
  }
}

TEST_CASE("membership is invariant to constant distance shifts and d/gamma rescaling") {
  std::mt19937_64 rng(77);
  scm::CadreParams params = random_params(3, 4, rng);
  scm::Vector x(3);
  x << 0.3, -0.8, 1.2;
  const double gamma = 1.7;

  // Softmax shift invariance, checked directly on the exposed softmax.
  scm::Vector scores(4);
  scores << -3.0, -1.0, -4.0, -2.5;
  const scm::Vector base = scm::stable_softmax(scores);
  const scm::Vector shifted = scm::stable_softmax(scores.array() + 123.0);
  CHECK((base - shifted).cwiseAbs().maxCoeff() < 1e-14);

  // gamma * |d| is the only quantity that matters: scale d by k, gamma by 1/k.
  const double k = 3.7;
  scm::CadreParams scaled = params;
  scaled.d *= k;
  const scm::Vector g1 = scm::membership(x, params, gamma);
  const scm::Vector g2 = scm::membership(x, scaled, gamma / k);
  CHECK((g1 - g2).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("predict_cadre is the documented affine map") {
  scm::CadreParams p = two_cadre_params();
  scm::Vector x(3);
  x << 9.0, 2.0, 3.0;  // target features are (2, 3)

  // Cadre 0: w = (1, 0), w0 = 0 -> 2. Cadre 1: w = (-1, 2), w0 = 1 -> 5.
  CHECK(scm::predict_cadre(x, p, 0) == doctest::Approx(2.0));
  CHECK(scm::predict_cadre(x, p, 1) == doctest::Approx(5.0));

  // Constant model ignores x entirely.
  scm::CadreParams constant = p;
  constant.weights.setZero();
  constant.intercepts << 3.0, 3.0;
  CHECK(scm::predict_cadre(x, constant, 0) == 3.0);

  // Zero input returns the intercept.
  scm::Vector zero = scm::Vector::Zero(3);
  CHECK(scm::predict_cadre(zero, p, 1) == doctest::Approx(1.0));

  CHECK_THROWS_AS(scm::predict_cadre(x, p, 2), scm::Error);
  CHECK_THROWS_AS(scm::predict_cadre(x, p, -1), scm::Error);
}

TEST_CASE("predict is a convex combination of cadre predictions") {
  scm::CadreParams p = two_cadre_params();

  // Symmetric memberships average the cadre models: g = (0.5, 0.5),
  // e = (2, 4) -> 3.
  scm::CadreParams sym = p;
  sym.centers << -1.0, 1.0,
                  0.0, 0.0;
  sym.weights << 0.0, 0.0,
                 0.0, 0.0;
  sym.intercepts << 2.0, 4.0;
  scm::Vector x(3);
  x << 0.0, 0.0, 0.0;
  CHECK(scm::predict(x, sym, 1.0) == doctest::Approx(3.0).epsilon(1e-14));

  // Identical cadre models collapse regardless of membership.
  scm::CadreParams same = p;
  same.weights.col(1) = same.weights.col(0);
  same.intercepts(1) = same.intercepts(0);
  scm::Vector x2(3);
  x2 << 0.7, -0.2, 1.5;
  CHECK(scm::predict(x2, same, 2.0) ==
        doctest::Approx(scm::predict_cadre(x2, same, 0)).epsilon(1e-14));

  // Random draws stay inside the cadre-prediction envelope.
  std::mt19937_64 rng(11);
  std::normal_distribution<double> gauss(0.0, 1.5);
  for (int trial = 0; trial < 200; ++trial) {
    scm::CadreParams params = random_params(3, 3, rng);
    scm::Vector xr(3);
    for (int i = 0; i < 3; ++i) xr(i) = gauss(rng);
    const scm::Matrix e = scm::cadre_predictions(xr.transpose(), params);
    const double f = scm::predict(xr, params, 1.3);
    CHECK(f >= e.row(0).minCoeff() - 1e-12);
    CHECK(f <= e.row(0).maxCoeff() + 1e-12);
  }
}

TEST_CASE("assign picks the argmax with lowest-index ties") {
  scm::CadreParams p = two_cadre_params();
  scm::Vector near_second(3);
  near_second << 1.0, 1.0, 0.0;
  CHECK(scm::assign(near_second, p, 4.0) == 1);

  // Exactly symmetric memberships tie; the lower index wins.
  scm::CadreParams sym = p;
  sym.centers << -1.0, 1.0,
                  0.0, 0.0;
  scm::Vector mid(3);
  mid << 0.0, 0.0, 0.0;
  CHECK(scm::assign(mid, sym, 1.0) == 0);

  // Single cadre is forced.
  scm::CadreParams single = p;
  single.centers = p.centers.col(0);
  single.weights = p.weights.col(0);
  single.intercepts = p.intercepts.head(1);
  CHECK(scm::assign(mid, single, 1.0) == 0);
}

TEST_CASE("batch helpers agree with their per-row counterparts") {
  std::mt19937_64 rng(5);
  scm::CadreParams params = random_params(4, 3, rng);
  std::normal_distribution<double> gauss(0.0, 1.0);
  scm::Matrix x(6, 4);
  for (scm::Index i = 0; i < x.size(); ++i) x(i) = gauss(rng);

  const scm::Matrix g = scm::membership_matrix(x, params, 2.0);
  const scm::Matrix e = scm::cadre_predictions(x, params);
  const scm::Vector f = scm::predict_all(x, params, 2.0);
  const std::vector<scm::Index> labels = scm::assign_all(x, params, 2.0);

  for (scm::Index i = 0; i < x.rows(); ++i) {
    const scm::Vector xi = x.row(i).transpose();
    CHECK((g.row(i).transpose() - scm::membership(xi, params, 2.0)).cwiseAbs().maxCoeff() <
          1e-14);
    for (scm::Index m = 0; m < 3; ++m)
      CHECK(e(i, m) == doctest::Approx(scm::predict_cadre(xi, params, m)).epsilon(1e-14));
    CHECK(f(i) == doctest::Approx(scm::predict(xi, params, 2.0)).epsilon(1e-14));
    CHECK(labels[static_cast<std::size_t>(i)] == scm::assign(xi, params, 2.0));
  }
}

TEST_CASE("validate catches malformed params and hyperparams") {
  scm::CadreParams p = two_cadre_params();
  CHECK_NOTHROW(scm::validate(p, 3));

  scm::CadreParams bad_sigma = p;
  bad_sigma.sigma2 = 0.0;
  CHECK_THROWS_AS(scm::validate(bad_sigma, 3), scm::Error);

  scm::CadreParams bad_idx = p;
  bad_idx.cadre_feature_idx = {0, 3};  // out of range for P=3
  CHECK_THROWS_AS(scm::validate(bad_idx, 3), scm::Error);

  scm::CadreParams dup_idx = p;
  dup_idx.target_feature_idx = {1, 1};
  CHECK_THROWS_AS(scm::validate(dup_idx, 3), scm::Error);

  scm::CadreParams short_d = p;
  short_d.d.resize(1);
  short_d.d << 1.0;
  CHECK_THROWS_AS(scm::validate(short_d, 3), scm::Error);

  scm::Hyperparams hp;
  CHECK_NOTHROW(scm::validate(hp));
  CHECK(hp.alpha_d == 0.95);
  CHECK(hp.alpha_w == 0.05);

  scm::Hyperparams bad_gamma = hp;
  bad_gamma.gamma = 0.0;
  CHECK_THROWS_AS(scm::validate(bad_gamma), scm::Error);

  scm::Hyperparams bad_alpha = hp;
  bad_alpha.alpha_d = 1.5;
  CHECK_THROWS_AS(scm::validate(bad_alpha), scm::Error);

  scm::Hyperparams bad_m = hp;
  bad_m.cadres = 0;
  CHECK_THROWS_AS(scm::validate(bad_m), scm::Error);
}

}  // TEST_SUITE
