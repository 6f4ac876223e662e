#include "doctest.h"
#include "sharpdecay/billiards.hpp"
#include "sharpdecay/dynmaps.hpp"
#include "sharpdecay/inducing.hpp"
#include "sharpdecay/renewal.hpp"

#include <cmath>

using namespace sharpdecay;
using namespace sharpdecay::inducing;

namespace {

billiards::BilliardSystem stadium() { return {billiards::build_stadium(2, 1), billiards::ReturnSet::FirstArcCollisions}; }

}  // namespace

TEST_CASE("first return examples") {
  const InducedSystem<maps::DoublingSystem> d(maps::DoublingSystem{}, 100);
  const auto r1 = first_return(d, maps::dyadic_from_value(0.75, 1, 1));
  CHECK(r1.h == 1);
  CHECK(r1.x.value() == 0.5);
  for (double g : {0.3, 0.5, 0.9}) {
    const InducedSystem<maps::LsvSystem> l(maps::LsvSystem{maps::LsvSpec(g)}, 100);
    const auto r2 = first_return(l, 0.875);
    CHECK(r2.h == 1);
    CHECK(r2.x == 0.75);
  }
  const InducedSystem<maps::LsvSystem> l(maps::LsvSystem{maps::LsvSpec(0.5)}, 100);
  CHECK_THROWS_AS(first_return(l, 0.25), InvalidArgument);
  CHECK_THROWS_AS(first_return(l, 0.5), Resample);
  CHECK_THROWS_AS(InducedSystem<maps::LsvSystem>(maps::LsvSystem{maps::LsvSpec(0.5)}, 0), InvalidArgument);
}

TEST_CASE("lsv return times agree with the branch intervals") {
  const double g = 0.9;
  const auto dec = renewal::branch_intervals(g, 64);
  const InducedSystem<maps::LsvSystem> l(maps::LsvSystem{maps::LsvSpec(g)}, 1'000'000);
  for (renewal::Index n : {1, 2, 3, 7, 20, 50}) {
    const auto [lo, hi] = dec.interval(n);
    for (double t : {0.1, 0.5, 0.9}) CHECK(first_return(l, lo + t * (hi - lo)).h == n);
  }
  // y slightly above 1/2 has a long excursion.
  const double y = 0.5 + 1e-6;
  const auto h = first_return(l, y).h;
  CHECK(h > 50);
  const auto deep = renewal::branch_intervals(g, h + 1);
  const auto [lo, hi] = deep.interval(h);
  CHECK((y >= lo && y < hi));
}

TEST_CASE("censoring at the cap") {
  const InducedSystem<maps::LsvSystem> l(maps::LsvSystem{maps::LsvSpec(0.5)}, 5);
  const auto r = first_return(l, 0.5 + 1e-9);
  CHECK(r.censored);
  CHECK(r.h == 5);
}

TEST_CASE("doubling tail is geometric") {
  const InducedSystem<maps::DoublingSystem> d(maps::DoublingSystem{}, 1000);
  TailOptions opt;
  opt.n_max = 12;
  opt.n_samples = 200'000;
  const auto est = return_tail(d, opt, 3);
  CHECK(est.survival(0) == 1.0);
  CHECK_FALSE(est.orbit_thinning);
  for (int n = 1; n <= 12; ++n) CHECK(std::abs(est.survival(n) - std::pow(2.0, -n)) <= 3 * est.halfwidth(n));
  CHECK(est.mean_h == doctest::Approx(2.0).epsilon(0.01));
}

TEST_CASE("survival is nonincreasing and reproducible") {
  const InducedSystem<maps::LsvSystem> l(maps::LsvSystem{maps::LsvSpec(0.5)}, 1'000'000);
  TailOptions opt;
  opt.n_max = 200;
  opt.n_samples = 50'000;
  opt.chunk = 4096;
  opt.workers = 1;
  const auto a = return_tail(l, opt, 5);
  opt.workers = 3;
  const auto b = return_tail(l, opt, 5);
  CHECK(a.orbit_thinning);
  CHECK(a.counts == b.counts);
  for (int n = 1; n <= 200; ++n) CHECK(a.survival(n) <= a.survival(n - 1));
}

TEST_CASE("induced phi") {
  CHECK(induced_phi({5}, 1) == 5);
  CHECK(induced_phi({3, 4}, 2) == 7);
  CHECK_THROWS_AS(induced_phi({3}, 2), InvalidArgument);
}

TEST_CASE("visit counts along stadium orbits") {
  const auto sys = stadium();
  const InducedSystem<billiards::BilliardSystem> ind(sys, 1'000'000);
  CounterRng rng(41, 0);
  for (int trial = 0; trial < 200; ++trial) {
    try {
      const auto y = sys.sample_X(rng);
      const std::int64_t sigma = 1 + trial % 5;
      std::vector<std::int64_t> hs;
      auto x = y;
      for (std::int64_t k = 0; k < sigma; ++k) {
        const auto r = first_return(ind, x);
        hs.push_back(r.h);
        x = r.x;
      }
      CHECK(visits_before(sys, y, induced_phi(hs, sigma)) == sigma);
    } catch (const Resample&) {
    }
  }
}

TEST_CASE("Kac formula") {
  SUBCASE("stadium") {
    const auto sys = stadium();
    const auto mu = estimate_measure_X(sys, 400'000, 7);
    CHECK(mu.value == doctest::Approx(sys.analytic_measure_X()).epsilon(0.01));
    TailOptions opt;
    opt.n_max = 10;
    opt.n_samples = 400'000;
    const auto est = return_tail(InducedSystem(sys, 1'000'000), opt, 7);
    CHECK(est.mean_h * mu.value == doctest::Approx(1.0).epsilon(0.02));
  }
  SUBCASE("lsv") {
    const maps::LsvSystem sys{maps::LsvSpec(0.3)};
    const auto mu = estimate_measure_X(sys, 4'000'000, 9);
    TailOptions opt;
    opt.n_max = 10;
    opt.n_samples = 400'000;
    const auto est = return_tail(InducedSystem(sys, 10'000'000), opt, 9);
    CHECK(est.mean_h * mu.value == doctest::Approx(1.0).epsilon(0.02));
  }
  SUBCASE("doubling") {
    const auto mu = estimate_measure_X(maps::DoublingSystem{}, 400'000, 11);
    CHECK(mu.value == doctest::Approx(0.5).epsilon(0.01));
  }
}

TEST_CASE("the induced map preserves mu_X on the stadium") {
  const auto sys = stadium();
  const InducedSystem<billiards::BilliardSystem> ind(sys, 1'000'000);
  CounterRng rng(43, 0);
  const int n = 100'000;
  double a_start = 0, a_img = 0, b_start = 0, b_img = 0;
  int used = 0;
  for (int i = 0; i < n; ++i) {
    try {
      const auto x = sys.sample_X(rng);
      const auto r = first_return(ind, x);
      if (r.censored) continue;
      a_start += std::cos(x.bp.phi) > 0.5;
      a_img += std::cos(r.x.bp.phi) > 0.5;
      b_start += x.bp.piece_id == 1;
      b_img += r.x.bp.piece_id == 1;
      ++used;
    } catch (const Resample&) {
    }
  }
  auto close = [&](double s, double t) {
    const double p = 0.5 * (s + t) / used;
    return std::abs(s - t) / used <= 4 * std::sqrt(2 * p * (1 - p) / used);
  };
  CHECK(close(a_start, a_img));
  CHECK(close(b_start, b_img));
}

TEST_CASE("birkhoff scalings") {
  CHECK(birkhoff_scale(Scaling::SqrtN, 100) == doctest::Approx(10));
  CHECK(birkhoff_scale(Scaling::NLogNSqrt, 100) == doctest::Approx(std::sqrt(100 * std::log(100.0))));
  CHECK(birkhoff_scale(Scaling::NPowOneOverBeta, 1000, 1.5) == doctest::Approx(100));
  CHECK(parse_scaling("n_logn_sqrt") == Scaling::NLogNSqrt);
  CHECK_THROWS_AS(parse_scaling("log"), InvalidArgument);
}

TEST_CASE("doubling return times satisfy the classical CLT") {
  const InducedSystem<maps::DoublingSystem> d(maps::DoublingSystem{}, 1000);
  BirkhoffOptions opt;
  opt.n = 10'000;
  opt.n_samples = 8000;
  const auto res = normalized_birkhoff(d, opt, 13);
  CHECK(res.values.size() == 8000);
  CHECK(res.h_bar == doctest::Approx(2.0).epsilon(0.001));
  CHECK(std::abs(res.moments.excess_kurtosis) < 0.2);
  CHECK(std::abs(res.moments.skewness) < 0.15);
  CHECK(res.moments.variance == doctest::Approx(2.0).epsilon(0.1));
}
