#include "doctest.h"
#include "golden.hpp"
#include "sharpdecay/core.hpp"
#include "sharpdecay/seqkit.hpp"

#include <random>
#include <sstream>

using namespace sharpdecay;
using seq::RealSeq;

TEST_CASE("philox matches the Random123 known answers") {
  for (int k = 0; k < 3; ++k) {
    Philox4x32Block ctr;
    for (int i = 0; i < 4; ++i) ctr[i] = golden::kPhiloxCtr[k][i];
    const auto out = philox4x32_10(ctr, {golden::kPhiloxKey[k][0], golden::kPhiloxKey[k][1]});
    for (int i = 0; i < 4; ++i) CHECK(out[i] == golden::kPhiloxOut[k][i]);
  }
}

TEST_CASE("counter streams are reproducible and distinct") {
  CounterRng a(42, 7), b(42, 7), c(42, 8);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    differs = differs || x != c.next_u64();
  }
  CHECK(differs);
  CounterRng u(1, 1);
  for (int i = 0; i < 1000; ++i) {
    const double x = u.uniform();
    CHECK((x >= 0.0 && x < 1.0));
  }
}

TEST_CASE("map_streams results do not depend on the worker count") {
  auto fn = [](std::size_t i) {
    CounterRng r(3, i);
    double s = 0;
    for (int k = 0; k < 100; ++k) s += r.uniform();
    return s;
  };
  const auto one = map_streams(37, 1, fn);
  const auto many = map_streams(37, 5, fn);
  CHECK(one == many);
  const double r1 = tree_reduce(one, [](double x, double y) { return x + y; });
  const double r5 = tree_reduce(many, [](double x, double y) { return x + y; });
  CHECK(r1 == r5);
}

TEST_CASE("convolution examples") {
  RealSeq e = RealSeq::Zero(6), a(6);
  e(0) = 1;
  a << 0.5, -1, 2, 3.25, 0, 7;
  CHECK((seq::convolve(e, a) - a).cwiseAbs().maxCoeff() == 0.0);

  const RealSeq ones = RealSeq::Ones(3);
  const RealSeq r = seq::convolve(ones, ones);
  CHECK(r(0) == 1);
  CHECK(r(1) == 2);
  CHECK(r(2) == 3);

  const RealSeq c = seq::convolve(seq::rate_seq(1.5, 0, 4), seq::rate_seq(1.2, 0, 4));
  CHECK(c(4) == doctest::Approx(golden::kRate15Conv12At4).epsilon(1e-13));
}

TEST_CASE("convolution is commutative and bilinear") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> U(0, 1);
  RealSeq a(200), b(200), d(200);
  for (int i = 0; i < 200; ++i) {
    a(i) = U(gen);
    b(i) = U(gen);
    d(i) = U(gen);
  }
  CHECK((seq::convolve(a, b) - seq::convolve(b, a)).cwiseAbs().maxCoeff() < 1e-12);
  const RealSeq lhs = seq::convolve(RealSeq(2.5 * a + d), b);
  const RealSeq rhs = 2.5 * seq::convolve(a, b) + seq::convolve(d, b);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-11);
}

TEST_CASE("convolution of mismatched lengths is rejected") {
  CHECK_THROWS_AS(seq::convolve(RealSeq::Ones(3), RealSeq::Ones(4)), InvalidArgument);
}

TEST_CASE("zeta and rate sequences") {
  CHECK(seq::zeta_seq(3.0, 10)(10) == doctest::Approx(1e-3).epsilon(1e-14));
  CHECK(seq::zeta_seq(2.0, 10)(10) == doctest::Approx(0.023025850929940457).epsilon(1e-14));
  CHECK(seq::zeta_seq(1.5, 4)(4) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(seq::rate_seq(2.0, 0, 4)(4) == 0.0625);
  CHECK(seq::rate_seq(1.0, 1, 1)(1) == 0.0);
  CHECK_THROWS_AS(seq::rate_seq(-1.0, 0, 4), InvalidArgument);
}

TEST_CASE("rate(2) convolved with itself is dominated by rate(2) log n") {
  const seq::Index N = 2048;
  const RealSeq c = seq::convolve(seq::rate_seq(2.0, 0, N), seq::rate_seq(2.0, 0, N));
  const double r = seq::sup_ratio(c, seq::rate_seq(2.0, 1, N), 2, N);
  CHECK(std::isfinite(r));
  CHECK(r < 50);
}

TEST_CASE("sup ratios for the standard convolution facts are bounded") {
  const seq::Index N = 2048;
  const RealSeq q = seq::rate_seq(1.2, 0, N), ql = seq::rate_seq(1.2, 1, N);
  const double r1 = seq::sup_ratio(seq::convolve(seq::rate_seq(1.5, 0, N), q), q, 2, N);
  const double r2 = seq::sup_ratio(seq::convolve(seq::rate_seq(1.5, 0, N), ql), ql, 2, N);
  CHECK(r1 < 50);
  CHECK(r2 < 50);
  // The ratio stabilizes: the second half of the window adds little.
  const double half = seq::sup_ratio(seq::convolve(seq::rate_seq(1.5, 0, N), q), q, 2, N / 2);
  CHECK(r1 <= half * 1.05);
}

TEST_CASE("tail sums") {
  RealSeq a = RealSeq::Zero(5);
  a(1) = a(2) = 1;
  const auto t = seq::tail_sum_seq(a).values;
  CHECK(t(0) == 2);
  CHECK(t(1) == 1);
  CHECK(t(2) == 0);

  const seq::Index N = 40;
  RealSeq g(N + 1);
  for (seq::Index j = 0; j <= N; ++j) g(j) = std::pow(2.0, -static_cast<double>(j));
  const auto tg = seq::tail_sum_seq(g).values;
  for (seq::Index n = 0; n <= N; ++n) CHECK(tg(n) == doctest::Approx(std::pow(2.0, -double(n)) - std::pow(2.0, -double(N))).epsilon(1e-12));

  const auto t3 = seq::tail_sum_seq(seq::rate_seq(3.0, 0, 20000)).values;
  CHECK(t3(1000) / (0.5 * std::pow(1000.0, -2)) == doctest::Approx(1.0).epsilon(2e-3));
}

TEST_CASE("b sequence") {
  RealSeq delta = RealSeq::Zero(4);
  delta(0) = 1;
  const RealSeq b1 = seq::b_seq(delta, 1.0);
  for (int n = 0; n < 4; ++n) CHECK(b1(n) == 1.0);

  RealSeq u(3);
  u << 1, 0.5, 0;
  const RealSeq b2 = seq::b_seq(u, 1.5);
  CHECK(b2(0) == doctest::Approx(4.0 / 3.0).epsilon(1e-15));
  CHECK(b2(1) == 1.0);

  const seq::Index N = 1'000'000;
  RealSeq tail = seq::rate_seq(2.0, 0, N);
  const double mean = 1.0 + (seq::tail_sum_seq(tail).values(0));
  const RealSeq b3 = seq::b_seq(tail, mean);
  const double r100 = (b3(100) - 1.0) * mean * 100.0, r1000 = (b3(1000) - 1.0) * mean * 1000.0;
  CHECK(std::abs(r1000 - 1.0) < std::abs(r100 - 1.0));
  CHECK(r1000 == doctest::Approx(1.0).epsilon(2e-3));

  RealSeq bad(3);
  bad << 1, 0.2, 0.5;
  CHECK_THROWS_AS(seq::b_seq(bad, 1.5), InvalidArgument);
}

TEST_CASE("gamma sequence") {
  RealSeq delta = RealSeq::Zero(50);
  delta(0) = 1;
  CHECK((seq::gamma_seq(2.5, delta) - seq::rate_seq(2.5, 0, 49)).cwiseAbs().maxCoeff() < 1e-15);

  const seq::Index N = 2048;
  const RealSeq g = seq::gamma_seq(2.5, seq::rate_seq(2.5, 0, N));
  CHECK(seq::sup_ratio(g, seq::rate_seq(2.5, 0, N), 2, N) < 50);

  const RealSeq gl = seq::gamma_seq(2.0, seq::rate_seq(2.0, 1, N));
  CHECK(seq::sup_ratio(gl, seq::rate_seq(2.0, 1, N), 2, N) < 50);
}

TEST_CASE("csv round trip") {
  RealSeq s(4);
  s << 1, 0.1, 1e-300, 3.5;
  std::stringstream ss;
  seq::write_csv(ss, s, "test");
  const RealSeq back = seq::read_csv(ss);
  CHECK(back.size() == 4);
  CHECK((back - s).cwiseAbs().maxCoeff() == 0.0);
}
