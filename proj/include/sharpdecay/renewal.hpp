// Operator renewal sequences for the first return of the LSV map to
// Y = [1/2, 1]: the branch partition {phi = n}, Ulam discretizations R(n) of
// the branch transfer operators, the recursion T(n) = sum_j R(j) T(n-j), the
// split T(n) = b(n) P + H(n), and two routes to tower correlations.
//
// Cells are the uniform partition of Y in the coordinate u = 2y - 1. Grid
// functions are densities with respect to Lebesgue measure on Y (dy), and
// R(n) acts on them as a column-stochastic (in total) Lebesgue-normalized
// transfer operator. Branch n is u in [x_{n-1}, x_{n-2}) with x_{-1} = 1,
// x_0 = 1/2 and x_k the preimage of x_{k-1} under the left branch.
#ifndef SHARPDECAY_RENEWAL_HPP
#define SHARPDECAY_RENEWAL_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sharpdecay/core.hpp"
#include "sharpdecay/seqkit.hpp"

namespace sharpdecay::renewal {

using Index = Eigen::Index;
using seq::RealSeq;

struct BranchDecomposition {
  double gamma = 0.5;
  Index N = 0;
  /// x[k + 1] = x_k for k = -1..N.
  std::vector<double> x;

  double x_at(Index k) const { return x[static_cast<std::size_t>(k + 1)]; }
  /// Branch n as an interval of Y (y coordinate), n = 1..N.
  std::pair<double, double> interval(Index n) const;
  /// Leb{y in Y : phi(y) > n} = x_{n-1} / 2, n = 0..N.
  double tail_measure(Index n) const { return 0.5 * x_at(n - 1); }
  /// Inverse of F = f^n on branch n: Y -> branch n, in the y coordinate.
  double inverse_branch(Index n, double y_target) const;
  /// phi(y) by forward iteration, capped at N + 1.
  Index phi(double y) const;
};

/// x_k for k = -1..N by backward iteration of the left LSV branch.
BranchDecomposition branch_intervals(double gamma, Index N);

/// One R(n) restricted to the columns (source cells) that meet branch n.
struct BranchBlock {
  Index col0 = 0;
  Eigen::MatrixXd M;        // m x c
  Eigen::VectorXd overlap;  // |cell (col0 + k) intersect branch n| in y units
};

struct UlamModel {
  Index m = 0;
  Index N = 0;
  double gamma = 0.5;
  BranchDecomposition dec;
  std::vector<BranchBlock> R;  // R[n - 1] for n = 1..N
  BranchBlock tail;            // lumped branches n > N
  Eigen::MatrixXd R_total;
  Eigen::VectorXd rho;  // density of mu_Y on cells, sum rho * dy = 1
  double dy = 0.0;      // cell width in y
  double mean_phi = 0.0;
  RealSeq branch_mass;  // mu_Y(phi = n), n = 0..N (entry 0 = 0)
  RealSeq tail_phi;     // mu_Y(phi > n), n = 0..K (extended table)
  double tail_remainder = 0.0;  // estimate of sum_{n > K} mu_Y(phi > n)
  int power_iterations = 0;
  std::int64_t gcd = 1;

  /// mu_Y(phi > n) for n >= 0 (0 beyond the extended table).
  double mu_tail(Index n) const { return n < tail_phi.size() ? tail_phi(n) : 0.0; }
  /// |cell i intersect {phi > r}| in y units.
  double cell_tail(Index i, Index r) const;
  /// Sum_{j > n} mu_Y(phi > j), including the power-law remainder.
  double tail_sum(Index n) const;
  RealSeq b(Index n_max) const;
};

struct UlamOptions {
  double power_tol = 1e-12;
  int power_max_iter = 100'000;
  Index extended_table = Index(1) << 20;
};

UlamModel ulam_R(const BranchDecomposition& dec, Index m, const UlamOptions& opt = {});

/// Applies R(n) (1 <= n <= N) to a grid density.
Eigen::VectorXd apply_R(const UlamModel& model, Index n, const Eigen::VectorXd& v);

struct RenewalSequence {
  std::vector<Eigen::MatrixXd> T;  // T[n], n = 0..n_max
  RealSeq b;
  RealSeq residual;  // sup-norm of T(n) - b(n) P in the mu_Y-normalized frame
};

/// T(0) = I, T(n) = sum_{j=1}^n R(j) T(n-j) for n <= n_max <= model.N.
RenewalSequence renewal_T(const UlamModel& model, Index n_max);

/// The scalar recursion t(0) = 1, t(n) = sum_{j=1}^n r(j) t(n-j).
RealSeq renewal_scalar(const RealSeq& r, Index n_max);

/// Tower observable: value per (cell, level) for levels 0..L-1; zero above.
using TowerObservable = Eigen::MatrixXd;

struct TowerPair {
  RealSeq rho_direct;
  RealSeq rho_renewal;
  double deficit = 0.0;  // mu_Delta mass on levels >= N, beyond the explicit branches
  std::string warning;
};

/// rho*(n) = int v . w o f_Delta^n dmu_Delta for n = 0..n_max, by pushing
/// mass through the discretized tower and by the renewal convolution
/// formula. Requires L + n_max <= model.N. `Tseq` (optional) supplies
/// precomputed T(n) with n >= n_max.
TowerPair tower_correlation_pair(const UlamModel& model, const TowerObservable& v, const TowerObservable& w, Index n_max,
                                 const RenewalSequence* Tseq = nullptr);

/// Only the direct route (no T(n) matrices needed).
RealSeq tower_correlation_direct(const UlamModel& model, const TowerObservable& v, const TowerObservable& w, Index n_max);

/// mu(Y) = 1 / mean_phi and the grid function of 1_Y on level 0.
TowerObservable indicator_Y(const UlamModel& model);

/// 1_Y - kappa 1_{phi = 1} with kappa chosen so that the mean under mu is 0;
/// stays supported in Y.
TowerObservable centered_indicator_Y(const UlamModel& model);

/// int v dmu for a tower observable.
double tower_mean(const UlamModel& model, const TowerObservable& v);

}  // namespace sharpdecay::renewal

#endif  // SHARPDECAY_RENEWAL_HPP
