#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "gangtrack/core_density.hpp"
#include "gangtrack/errors.hpp"
#include "gangtrack/quadrature.hpp"
#include "oracles.hpp"

using namespace gangtrack;

namespace {
const KmScale kScale = KmScale::at_latitude(23.6);
}

TEST_CASE("scale constants at the reference latitude") {
  CHECK(kScale.delta_lat == doctest::Approx(1.0 / 110.574).epsilon(1e-15));
  CHECK(kScale.delta_lon == doctest::Approx(1.0 / (111.320 * std::cos(23.6 * oracle::kPi / 180.0))).epsilon(1e-15));
  CHECK(kScale.ref_lat == 23.6);
}

TEST_CASE("kernel peak and symmetry") {
  CHECK(kernel2({0.0, 0.0}, {1.0, 1.0}) == doctest::Approx(1.0 / (2.0 * oracle::kPi)).epsilon(1e-14));
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int k = 0; k < 50; ++k) {
    const Offset z{u(gen), u(gen)};
    const Bandwidth bw{0.3 + std::fabs(u(gen)), 0.3 + std::fabs(u(gen))};
    CHECK(kernel2(z, bw) == kernel2({-z.dlon, -z.dlat}, bw));
    CHECK(kernel2(z, bw) == doctest::Approx(oracle::kernel(z.dlon, z.dlat, bw.lon, bw.lat)).epsilon(1e-13));
  }
}

TEST_CASE("kernel integrates to one") {
  const Bandwidth bw{0.3, 0.5};
  const auto f = [&](double x, double y) { return kernel2({x, y}, bw); };
  const auto q = adaptive_trapezoid_2d(f, {-8 * bw.lon, 8 * bw.lon, -8 * bw.lat, 8 * bw.lat}, 17, 1e-10);
  CHECK(q.value == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(std::fabs(q.value - 1.0) < 1e-4);
}

TEST_CASE("kernel rejects non-positive bandwidth") {
  CHECK_THROWS_AS(kernel2({0, 0}, {0.0, 1.0}), InvalidParameter);
  CHECK_THROWS_AS(kernel2({0, 0}, {1.0, -1.0}), InvalidParameter);
}

TEST_CASE("weights: single past day") {
  for (double theta : {0.1, 1.0, 4.0, 300.0}) CHECK(weight(1, 2, theta) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("weights: uniform limit for very large theta") {
  for (int i = 1; i <= 5; ++i) CHECK(std::fabs(weight(i, 6, 1e9) - 0.2) < 1e-6);
}

TEST_CASE("weights: theta 4 with three past days") {
  const double a = std::exp(-3.0 / 4), b = std::exp(-2.0 / 4), c = std::exp(-1.0 / 4);
  const double s = a + b + c;
  CHECK(weight(1, 4, 4.0) == doctest::Approx(a / s).epsilon(1e-14));
  CHECK(weight(2, 4, 4.0) == doctest::Approx(b / s).epsilon(1e-14));
  CHECK(weight(3, 4, 4.0) == doctest::Approx(c / s).epsilon(1e-14));
}

TEST_CASE("weights sum to one, increase with recency and match direct evaluation") {
  for (double theta : {0.05, 0.3, 1.0, 4.0, 50.0, 500.0}) {
    for (int target : {2, 3, 10, 60, 400}) {
      const DecayWeights w(theta, target);
      double sum = 0.0;
      for (int i = 1; i < target; ++i) {
        sum += w(i, target);
        if (i > 1) CHECK(w(i, target) >= w(i - 1, target));
        if (theta >= 0.3) CHECK(w(i, target) == doctest::Approx(oracle::weight(i, target, theta)).epsilon(1e-12));
      }
      CHECK(std::fabs(sum - 1.0) < 1e-12);
    }
  }
  // Strictly increasing where the ratio is representable.
  const DecayWeights w(4.0, 20);
  for (int i = 2; i < 20; ++i) CHECK(w(i, 20) > w(i - 1, 20));
}

TEST_CASE("weights: small theta stays finite over long histories") {
  const DecayWeights w(0.05, 1000);
  CHECK(w(999, 1000) == doctest::Approx(1.0));
  CHECK(w(1, 1000) == 0.0);
  CHECK(std::isfinite(w.log_weight(1, 1000)));
}

TEST_CASE("weights: index out of range") {
  CHECK_THROWS_AS(weight(0, 3, 4.0), InvalidParameter);
  CHECK_THROWS_AS(weight(3, 3, 4.0), InvalidParameter);
  CHECK_THROWS_AS(weight(1, 3, 0.0), InvalidParameter);
  const DecayWeights w(4.0, 5);
  CHECK_THROWS_AS(w(1, 6), InvalidParameter);
}

TEST_CASE("full conditional: one point") {
  const std::vector<GeoPoint> hist{{85.3, 23.6}};
  const auto m = full_conditional(hist, {4.0, 1.0}, kScale);
  REQUIRE(m.components().size() == 1);
  CHECK(m.components()[0].weight == 1.0);
  CHECK(m.components()[0].scale_mult == 1.0);
}

TEST_CASE("full conditional: weights and pointwise density") {
  const std::vector<GeoPoint> hist{{85.30, 23.60}, {85.32, 23.61}, {85.29, 23.63}};
  const ModelParams p{4.0, 1.0};
  const auto m = full_conditional(hist, p, kScale);
  REQUIRE(m.components().size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(m.components()[static_cast<std::size_t>(i)].weight == doctest::Approx(oracle::weight(i + 1, 4, 4.0)).epsilon(1e-14));
  }
  CHECK(std::fabs(m.total_weight() - 1.0) < 1e-12);
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-0.05, 0.05);
  for (int k = 0; k < 100; ++k) {
    const GeoPoint s{85.31 + u(gen), 23.61 + u(gen)};
    const double ref = oracle::conditional(hist, p.theta, p.h, kScale, s);
    CHECK(std::fabs(mixture_eval(m, s) - ref) <= 1e-12 * std::max(1.0, ref));
    CHECK(mixture_eval(m, s) >= 0.0);
  }
}

TEST_CASE("full conditional: empty history") {
  CHECK_THROWS_AS(full_conditional(std::vector<GeoPoint>{}, {4.0, 1.0}, kScale), EmptyHistory);
}

TEST_CASE("mixture: peak, merge identity and unit mass") {
  const GeoPoint c{85.3, 23.6};
  const double h = 2.0;
  const GaussianMixture one({{c, 1.0, 1.0}}, h, kScale);
  const double h1 = h * kScale.delta_lon, h2 = h * kScale.delta_lat;
  CHECK(mixture_eval(one, c) == doctest::Approx(1.0 / (2 * oracle::kPi * h1 * h2)).epsilon(1e-13));

  const GaussianMixture two({{c, 1.0, 0.5}, {c, 1.0, 0.5}}, h, kScale);
  for (double d : {0.0, 0.01, 0.03, 0.1}) {
    const GeoPoint s{c.lon + d, c.lat - d / 2};
    CHECK(std::fabs(mixture_eval(two, s) - mixture_eval(one, s)) <= 1e-12 * mixture_eval(one, c));
  }

  const GaussianMixture mix({{c, 1.0, 0.3}, {{85.35, 23.62}, std::sqrt(2.0), 0.5}, {{85.28, 23.57}, std::sqrt(3.0), 0.2}},
                            h, kScale);
  const double w = 0.5;
  double mass = 0.0;
  const int steps = 400;
  const double dx = 2 * w / steps, dy = 2 * w / steps;
  for (int i = 0; i < steps; ++i) {
    for (int j = 0; j < steps; ++j) {
      mass += mixture_eval(mix, {85.3 - w + (i + 0.5) * dx, 23.6 - w + (j + 0.5) * dy}) * dx * dy;
    }
  }
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("mixture: log evaluation agrees and stays finite far away") {
  const GaussianMixture mix({{{85.3, 23.6}, 1.0, 0.4}, {{85.31, 23.6}, std::sqrt(2.0), 0.6}}, 1.0, kScale);
  const GeoPoint near{85.305, 23.603};
  CHECK(mixture_log_eval(mix, near) == doctest::Approx(std::log(mixture_eval(mix, near))).epsilon(1e-13));
  const GeoPoint far{87.0, 25.0};
  CHECK(mixture_eval(mix, far) == 0.0);
  CHECK(std::isfinite(mixture_log_eval(mix, far)));
}

TEST_CASE("mixture: invalid construction") {
  const GeoPoint c{85.3, 23.6};
  CHECK_THROWS_AS(GaussianMixture({{c, 1.0, 0.7}}, 1.0, kScale), InvalidParameter);
  CHECK_THROWS_AS(GaussianMixture({{c, 0.5, 1.0}}, 1.0, kScale), InvalidParameter);
  CHECK_THROWS_AS(GaussianMixture({{c, 1.0, 1.0}}, 0.0, kScale), InvalidParameter);
  CHECK_THROWS_AS(GaussianMixture({}, 1.0, kScale), EmptyHistory);
}

TEST_CASE("convolution identity: equal scales") {
  const std::vector<GeoPoint> centers{{85.3, 23.6}, {85.33, 23.58}};
  CHECK(convolution_identity_check(1.0, 1.0, centers, kScale) < 1e-6);
}

TEST_CASE("convolution identity: narrow second kernel") {
  const std::vector<GeoPoint> centers{{85.3, 23.6}};
  CHECK(convolution_identity_check(1.0, 1e-4, centers, kScale) < 1e-3);
}

TEST_CASE("convolution identity: random scales") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0.5, 3.0);
  const std::vector<GeoPoint> centers{{85.3, 23.6}};
  for (int seed = 0; seed < 20; ++seed) {
    const double t1 = u(gen), t2 = u(gen);
    CHECK(convolution_identity_check(t1, t2, centers, kScale) < 1e-5);
  }
  CHECK_THROWS_AS(convolution_identity_check(0.0, 1.0, centers, kScale), InvalidParameter);
}

TEST_CASE("parameter box validation") {
  CHECK_NOTHROW(ParamBox{}.validate());
  CHECK_THROWS_AS((ParamBox{5, 5, 0.5, 50}.validate()), InvalidParameter);
  CHECK_THROWS_AS((ParamBox{1, 500, 0.0, 50}.validate()), InvalidParameter);
  CHECK(ParamBox{}.contains({4.0, 1.0}));
  CHECK_FALSE(ParamBox{}.contains({0.5, 1.0}));
}
