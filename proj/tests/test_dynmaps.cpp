#include "doctest.h"
#include "sharpdecay/dynmaps.hpp"
#include "sharpdecay/renewal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace sharpdecay;
using namespace sharpdecay::maps;

namespace {

struct MeanSe {
  double mean, se;
};

// Batch-means estimate over 32 batches of a long orbit.
template <class System, class F>
MeanSe orbit_mean(const System& sys, F f, std::int64_t n, std::uint64_t seed) {
  const auto xs = acim_orbit(sys, std::nullopt, 10'000, n, seed);
  const std::int64_t batches = 32, per = n / batches;
  std::vector<double> means;
  for (std::int64_t b = 0; b < batches; ++b) {
    double s = 0;
    for (std::int64_t i = 0; i < per; ++i) s += f(xs[static_cast<std::size_t>(b * per + i)]);
    means.push_back(s / static_cast<double>(per));
  }
  const auto m = sample_moments(means);
  return {m.mean, std::sqrt(m.variance / static_cast<double>(batches))};
}

}  // namespace

TEST_CASE("lsv_step examples") {
  CHECK(lsv_left(1.0, 0.25) == doctest::Approx(0.375).epsilon(1e-15));
  for (double g : {0.2, 0.5, 0.9}) {
    const LsvSpec s(g);
    CHECK(lsv_step(s, 0.5) == 0.0);
    CHECK(lsv_step(s, 0.0) == 0.0);
    CHECK(lsv_step(s, 0.75) == 0.5);
  }
  CHECK_THROWS_AS(LsvSpec(0.0), InvalidArgument);
  CHECK_THROWS_AS(LsvSpec(1.0), InvalidArgument);
  CHECK_THROWS_AS(lsv_step(LsvSpec(0.5), 1.5), InvalidArgument);
}

TEST_CASE("lsv branches are onto and increasing") {
  const LsvSpec s(0.5);
  double prev = -1;
  for (int i = 0; i < 10000; ++i) {
    const double x = 0.5 * i / 10000.0;
    const double y = lsv_step(s, x);
    CHECK(y > prev);
    CHECK(y < 1.0);
    prev = y;
  }
  CHECK(lsv_step(s, std::nextafter(0.5, 0.0)) > 1.0 - 1e-12);
  CHECK(lsv_step(s, 1.0) == 1.0);
  for (double t : {0.0, 0.1, 0.5, 0.99, 1.0}) CHECK(lsv_left(0.5, lsv_left_inverse(0.5, t)) == doctest::Approx(t).epsilon(1e-13));
}

TEST_CASE("radial map examples") {
  const RadialHvSpec s1(1.0);
  const auto q = radial_hv_step(s1, {0.1, 0.0});
  CHECK(q.x() == doctest::Approx(0.11).epsilon(1e-14));
  CHECK(q.y() == 0.0);
  CHECK(radial_hv_step(s1, {0.0, 0.0}).norm() == 0.0);
  for (double g : {0.3, 0.8, 1.0, 1.7}) {
    const RadialHvSpec s(g);
    CHECK(s.r_star * (1 + std::pow(s.r_star, g)) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(radial_hv_radius(s, s.r_star) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("radial map preserves angle inside and expands radially") {
  const RadialHvSpec s(0.8);
  CounterRng rng(9, 0);
  for (int i = 0; i < 20000; ++i) {
    const double r = rng.uniform(), th = 2 * std::numbers::pi * rng.uniform();
    const Eigen::Vector2d p(r * std::cos(th), r * std::sin(th));
    const Eigen::Vector2d q = radial_hv_step(s, p);
    CHECK(q.norm() <= 1.0 + 1e-14);
    if (r <= s.r_star) {
      CHECK(q.norm() >= p.norm());
      if (r > 1e-3) CHECK(std::atan2(q.y(), q.x()) == doctest::Approx(std::atan2(p.y(), p.x())).epsilon(1e-12));
    }
    // Radial derivative of either branch is at least one.
    const double h = 1e-7;
    if (r > h && r < 1 - h && std::abs(r - s.r_star) > 2 * h) {
      const double d = (radial_hv_radius(s, r + h) - radial_hv_radius(s, r - h)) / (2 * h);
      CHECK(d >= 1.0 - 1e-6);
    }
  }
}

TEST_CASE("doubling map examples") {
  CHECK(doubling_step(0.3) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(doubling_step(0.6) == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(doubling_step(0.0) == 0.0);
  auto s = dyadic_from_value(0.75, 1, 1);
  s = dyadic_step(s);
  CHECK(s.value() == 0.5);
}

TEST_CASE("steps are pure") {
  const LsvSpec s(0.5);
  CHECK(lsv_step(s, 0.3) == lsv_step(s, 0.3));
  auto a = dyadic_from_value(0.3, 4, 2), b = a;
  for (int i = 0; i < 200; ++i) {
    a = dyadic_step(a);
    b = dyadic_step(b);
    CHECK(a.bits == b.bits);
  }
}

TEST_CASE("doubling orbit mean of x is one half") {
  const auto r = orbit_mean(DoublingSystem{}, [](const DyadicState& s) { return s.value(); }, 1 << 20, 3);
  CHECK(std::abs(r.mean - 0.5) < 3 * r.se);
}

TEST_CASE("lsv orbit frequency of Y matches the Ulam invariant density") {
  const LsvSystem sys{LsvSpec(0.5)};
  const auto r = orbit_mean(sys, [](double x) { return x >= 0.5 ? 1.0 : 0.0; }, 1 << 22, 5);
  const auto model = renewal::ulam_R(renewal::branch_intervals(0.5, 256), 256);
  CHECK(r.mean == doctest::Approx(1.0 / model.mean_phi).epsilon(0.02));
}

TEST_CASE("radial orbit angles are uniform") {
  const RadialHvSystem sys{RadialHvSpec(1.0)};
  const auto xs = acim_orbit(sys, std::nullopt, 1000, 1 << 18, 11);
  std::vector<double> th;
  for (std::size_t i = 0; i < xs.size(); i += 16) th.push_back(std::atan2(xs[i].y(), xs[i].x()));
  std::sort(th.begin(), th.end());
  const double d = ks_distance(th, [](double t) { return (t + std::numbers::pi) / (2 * std::numbers::pi); });
  CHECK(d < ks_mean(th.size()) + 3 * ks_sigma(th.size()));
}
