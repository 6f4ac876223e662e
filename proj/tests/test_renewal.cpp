#include "doctest.h"
#include "golden.hpp"
#include "sharpdecay/dynmaps.hpp"
#include "sharpdecay/fitkit.hpp"
#include "sharpdecay/inducing.hpp"
#include "sharpdecay/renewal.hpp"

#include <cmath>

using namespace sharpdecay;
using namespace sharpdecay::renewal;

namespace {

const UlamModel& model_512() {
  static const UlamModel m = ulam_R(branch_intervals(0.5, 256), 512);
  return m;
}

}  // namespace

TEST_CASE("branch intervals") {
  for (double g : {0.2, 0.5, 0.9}) {
    const auto dec = branch_intervals(g, 8);
    const auto b1 = dec.interval(1);
    CHECK(b1.first == 0.75);
    CHECK(b1.second == 1.0);
  }
  const auto dec = branch_intervals(0.5, 40);
  for (int k = 1; k <= 5; ++k) CHECK(dec.x_at(k) == doctest::Approx(golden::kBranchX[k - 1]).epsilon(1e-13));
  CHECK(dec.x_at(40) == doctest::Approx(golden::kBranchX40).epsilon(1e-12));
  CHECK_THROWS_AS(branch_intervals(1.0, 8), InvalidArgument);
  CHECK_THROWS_AS(dec.interval(0), InvalidArgument);
}

TEST_CASE("branches partition Y and map onto it") {
  const double g = 0.5;
  const Index N = 4000;
  const auto dec = branch_intervals(g, N);
  double total = 0;
  for (Index n = 1; n <= N; ++n) {
    const auto [lo, hi] = dec.interval(n);
    total += hi - lo;
  }
  CHECK(total + dec.tail_measure(N) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(dec.tail_measure(N) < 1e-6);
  const maps::LsvSpec spec(g);
  for (Index n : {1, 2, 5, 17, 60}) {
    const auto [lo, hi] = dec.interval(n);
    double a = lo, b = std::nextafter(hi, 0.0);
    for (Index k = 0; k < n; ++k) {
      a = maps::lsv_step(spec, a);
      b = maps::lsv_step(spec, b);
    }
    CHECK(std::abs(a - 0.5) < 1e-10);
    CHECK(std::abs(b - 1.0) < 1e-10);
    for (double t : {0.5, 0.6, 0.99}) {
      double y = dec.inverse_branch(n, t);
      CHECK((y >= lo && y <= hi));
      for (Index k = 0; k < n; ++k) y = maps::lsv_step(spec, y);
      CHECK(y == doctest::Approx(t).epsilon(1e-10));
    }
  }
}

TEST_CASE("tail measure decays like n^{-1/gamma}") {
  for (double g : {1.0 / 3.0, 0.5}) {
    const auto dec = branch_intervals(g, 600);
    RealSeq t(513);
    for (Index n = 0; n <= 512; ++n) t(n) = dec.tail_measure(n);
    CHECK(fit::loglog_fit(t, 8, 512).p == doctest::Approx(1.0 / g).epsilon(0.05 * g));
  }
}

TEST_CASE("Ulam matrices preserve Lebesgue mass") {
  const auto& M = model_512();
  Eigen::VectorXd v = Eigen::VectorXd::Random(M.m).cwiseAbs();
  const Eigen::VectorXd Rv = M.R_total * v;
  CHECK(std::abs(Rv.sum() - v.sum()) < 1e-10 * v.sum());
  double s = 0;
  for (Index n = 1; n <= M.N; ++n) s += apply_R(M, n, v).sum();
  const Eigen::VectorXd tail = M.tail.M * v.segment(M.tail.col0, M.tail.M.cols());
  CHECK(std::abs(s + tail.sum() - Rv.sum()) < 1e-10 * v.sum());
  CHECK((M.rho.array() > 0).all());
  CHECK(M.rho.sum() * M.dy == doctest::Approx(1.0).epsilon(1e-12));
  CHECK((M.R_total * M.rho - M.rho).cwiseAbs().maxCoeff() < 1e-10 * M.rho.maxCoeff());
  CHECK(M.gcd == 1);
  CHECK_THROWS_AS(ulam_R(branch_intervals(0.5, 16), 63), InvalidArgument);
  CHECK_THROWS_AS(ulam_R(branch_intervals(0.5, 16), 32), InvalidArgument);
}

TEST_CASE("branch masses agree with first-return Monte Carlo") {
  const auto& M = model_512();
  const inducing::InducedSystem<maps::LsvSystem> sys(maps::LsvSystem{maps::LsvSpec(0.5)}, 10'000'000);
  inducing::TailOptions opt;
  opt.n_max = 8;
  opt.n_samples = 1'000'000;
  const auto est = inducing::return_tail(sys, opt, 17);
  for (Index n = 1; n <= 6; ++n) {
    const double p = static_cast<double>(est.counts[n - 1] - est.counts[n]) / est.n_samples;
    CHECK(std::abs(p - M.branch_mass(n)) <= 3 * std::sqrt(p * (1 - p) / est.n_samples) + 1e-4);
  }
  const auto mu = inducing::estimate_measure_X(maps::LsvSystem{maps::LsvSpec(0.5)}, 4'000'000, 19);
  CHECK(M.mean_phi * mu.value == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("scalar renewal recursion") {
  RealSeq r = RealSeq::Zero(1001);
  r(1) = r(2) = 0.5;
  const RealSeq t = renewal_scalar(r, 1000);
  CHECK(t(0) == 1);
  CHECK(t(1) == 0.5);
  CHECK(t(2) == 0.75);
  CHECK(t(3) == 0.625);
  CHECK(std::abs(t(1000) - 2.0 / 3.0) < 1e-6);
}

TEST_CASE("operator renewal sequence") {
  const auto& M = model_512();
  const auto seq = renewal_T(M, 256);
  CHECK((seq.T[0] - Eigen::MatrixXd::Identity(M.m, M.m)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(seq.residual(256) < seq.residual(16) / 10);
  CHECK(seq.b(0) == doctest::Approx(M.b(0)(0)));
  const RealSeq b = M.b(300);
  CHECK(b(256) < b(16));
  CHECK(b(256) > 1.0);
  CHECK_THROWS_AS(renewal_T(M, M.N + 1), InvalidArgument);
}

TEST_CASE("tower correlation identities") {
  const auto& M = model_512();
  SUBCASE("constant one") {
    const Index n_max = 6, L = M.N - n_max;
    const TowerObservable one = TowerObservable::Ones(M.m, L);
    const auto pair = tower_correlation_pair(M, one, one, n_max);
    const double missing = 2.0 * M.tail_sum(L - 1) / M.mean_phi + 1e-12;
    for (Index n = 0; n <= n_max; ++n) {
      CHECK(std::abs(pair.rho_direct(n) - 1.0) <= missing);
      CHECK(std::abs(pair.rho_renewal(n) - 1.0) <= missing);
    }
  }
  SUBCASE("lag zero on the base") {
    TowerObservable v = TowerObservable::Zero(M.m, 1), w = TowerObservable::Zero(M.m, 1);
    for (Index j = 0; j < M.m; ++j) {
      v(j, 0) = std::sin(0.1 * double(j));
      w(j, 0) = 1.0 + double(j % 7);
    }
    double expected = 0;
    for (Index j = 0; j < M.m; ++j) expected += M.rho(j) * v(j, 0) * w(j, 0) * M.dy;
    expected /= M.mean_phi;
    const auto pair = tower_correlation_pair(M, v, w, 0);
    CHECK(pair.rho_direct(0) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(pair.rho_renewal(0) == doctest::Approx(expected).epsilon(1e-12));
  }
  SUBCASE("direct and renewal routes agree") {
    const auto v = indicator_Y(M);
    const auto pair = tower_correlation_pair(M, v, v, 30);
    for (Index n = 0; n <= 30; ++n)
      if (std::abs(pair.rho_direct(n)) > 1e-4) CHECK(std::abs(pair.rho_renewal(n) / pair.rho_direct(n) - 1.0) <= 0.01);
    CHECK(pair.rho_direct(0) == doctest::Approx(1.0 / M.mean_phi).epsilon(1e-12));
  }
}

TEST_CASE("centered indicator has mean zero") {
  const auto& M = model_512();
  CHECK(std::abs(tower_mean(M, centered_indicator_Y(M))) < 1e-12);
  CHECK(tower_mean(M, indicator_Y(M)) == doctest::Approx(1.0 / M.mean_phi).epsilon(1e-12));
}

TEST_CASE("grid refinement changes the renewal correlations little") {
  const auto coarse = ulam_R(branch_intervals(0.5, 256), 256);
  const auto& fine = model_512();
  const auto a = tower_correlation_pair(coarse, indicator_Y(coarse), indicator_Y(coarse), 30);
  const auto b = tower_correlation_pair(fine, indicator_Y(fine), indicator_Y(fine), 30);
  for (Index n = 0; n <= 30; ++n) CHECK(std::abs(a.rho_renewal(n) / b.rho_renewal(n) - 1.0) < 0.005);
}
