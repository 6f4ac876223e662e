// Discrete convolution algebra over finite nonnegative sequences and the
// standard rate templates n^{-p} (log n)^s used to express decay asymptotics.
//
// Sequences are Eigen column vectors indexed n = 0..N. Template rate
// sequences whose formula is undefined at n = 0 store 1 there.
#ifndef SHARPDECAY_SEQKIT_HPP
#define SHARPDECAY_SEQKIT_HPP

#include <Eigen/Dense>

#include <cmath>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sharpdecay/core.hpp"

namespace sharpdecay::seq {

template <typename Scalar>
using Seq = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using RealSeq = Seq<double>;
using Index = Eigen::Index;

/// (a*b)_n = sum_{j<=n} a_j b_{n-j}, for n = 0..N.
template <typename DerivedA, typename DerivedB>
Seq<typename DerivedA::Scalar> convolve(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  if (a.size() != b.size())
    throw InvalidArgument("convolve: length mismatch (" + std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  const Index len = a.size();
  Seq<Scalar> out = Seq<Scalar>::Zero(len);
  for (Index n = 0; n < len; ++n) {
    // Reverse-indexed dot product: a_0..a_n against b_n..b_0.
    out(n) = a.head(n + 1).dot(b.head(n + 1).reverse());
  }
  return out;
}

/// n^{-p} (ln n)^s for n >= 1, entry 0 set to 1.
template <typename Scalar = double>
Seq<Scalar> rate_seq(Scalar p, int log_power, Index N) {
  require(p > 0, "rate_seq: p must be positive");
  require(log_power >= 0, "rate_seq: log_power must be nonnegative");
  require(N >= 0, "rate_seq: N must be nonnegative");
  Seq<Scalar> out(N + 1);
  out(0) = Scalar(1);
  for (Index n = 1; n <= N; ++n) {
    const Scalar x = static_cast<Scalar>(n);
    out(n) = std::pow(x, -p) * (log_power == 0 ? Scalar(1) : std::pow(std::log(x), log_power));
  }
  return out;
}

/// The correction rate zeta_beta: n^{-beta} (beta > 2), n^{-2} ln n
/// (beta = 2), n^{-2(beta-1)} (1 < beta < 2); entry 0 set to 1.
template <typename Scalar = double>
Seq<Scalar> zeta_seq(Scalar beta, Index N) {
  require(beta > 1, "zeta_seq: beta must exceed 1");
  require(N >= 1, "zeta_seq: N must be at least 1");
  if (beta > 2) return rate_seq<Scalar>(beta, 0, N);
  if (beta == 2) return rate_seq<Scalar>(2, 1, N);
  return rate_seq<Scalar>(2 * (beta - 1), 0, N);
}

/// Truncated tail sums result_n = sum_{j=n+1}^{N} a_j.
struct TailSums {
  RealSeq values;
  Index truncation_index = 0;
  /// Bound on the omitted sum_{j>N} a_j when a majorant was supplied.
  std::optional<double> remainder_bound;
  bool truncated() const { return !remainder_bound.has_value(); }
};

template <typename Derived>
TailSums tail_sum_seq(const Eigen::MatrixBase<Derived>& a, std::optional<double> remainder_bound = std::nullopt) {
  require((a.array() >= 0).all(), "tail_sum_seq: entries must be nonnegative");
  const Index len = a.size();
  TailSums out;
  out.values = RealSeq::Zero(len);
  out.truncation_index = len - 1;
  out.remainder_bound = remainder_bound;
  double acc = 0.0;
  for (Index n = len - 1; n >= 0; --n) {
    out.values(n) = acc;
    acc += static_cast<double>(a(n));
  }
  return out;
}

/// Closed-form bound on sum_{j>N} j^{-p}(ln j)^s for the rate templates,
/// from the integral comparison (valid when the summand is decreasing past N).
double rate_tail_majorant(double p, int log_power, Index N);

/// b(n) = 1 + mean^{-1} sum_{j>n} tail_j where tail_j = mu(Phi > j).
RealSeq b_seq(const RealSeq& tail_phi, double mean_phi);

/// gamma_n = n^{-beta'} * sigma_n.
RealSeq gamma_seq(double beta_prime, const RealSeq& sigma_tail);

/// max_{n in [n0, n1]} num_n / den_n: bounded-ratio reading of num = O(den).
double sup_ratio(const RealSeq& num, const RealSeq& den, Index n0, Index n1);

/// Two-column CSV `n,value` preceded by one `# ...` comment line.
void write_csv(std::ostream& os, const RealSeq& s, const std::string& header_comment);
RealSeq read_csv(std::istream& is);

}  // namespace sharpdecay::seq

#endif  // SHARPDECAY_SEQKIT_HPP
