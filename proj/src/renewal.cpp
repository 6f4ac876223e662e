#include "sharpdecay/renewal.hpp"

#include <cmath>
#include <numeric>

#include "sharpdecay/dynmaps.hpp"

namespace sharpdecay::renewal {

namespace {

double overlap_len(double a, double b, double c, double d) { return std::max(0.0, std::min(b, d) - std::max(a, c)); }

/// Piecewise-constant density block: cell j gets M(:, j - col0) += m |[a_i, a_{i+1}] cap cell j| for row i.
BranchBlock assemble_block(const std::vector<double>& g, Index m, double lo, double hi) {
  BranchBlock blk;
  const double md = static_cast<double>(m);
  blk.col0 = std::min<Index>(m - 1, static_cast<Index>(std::floor(lo * md)));
  const Index col_end = std::min<Index>(m, std::max<Index>(blk.col0 + 1, static_cast<Index>(std::ceil(hi * md))));
  const Index c = col_end - blk.col0;
  blk.M = Eigen::MatrixXd::Zero(m, c);
  blk.overlap.resize(c);
  for (Index k = 0; k < c; ++k) {
    const double cl = static_cast<double>(blk.col0 + k) / md, cr = static_cast<double>(blk.col0 + k + 1) / md;
    blk.overlap(k) = 0.5 * overlap_len(lo, hi, cl, cr);
  }
  for (Index i = 0; i < m; ++i) {
    const double a = g[static_cast<std::size_t>(i)], b = g[static_cast<std::size_t>(i + 1)];
    const Index j0 = std::max<Index>(blk.col0, static_cast<Index>(std::floor(a * md)));
    const Index j1 = std::min<Index>(col_end - 1, static_cast<Index>(std::floor(b * md)));
    for (Index j = j0; j <= j1; ++j) {
      const double cl = static_cast<double>(j) / md, cr = static_cast<double>(j + 1) / md;
      blk.M(i, j - blk.col0) += md * overlap_len(a, b, cl, cr);
    }
  }
  return blk;
}

void add_block(Eigen::MatrixXd& dense, const BranchBlock& blk) { dense.middleCols(blk.col0, blk.M.cols()) += blk.M; }

}  // namespace

std::pair<double, double> BranchDecomposition::interval(Index n) const {
  require(n >= 1 && n <= N, "BranchDecomposition::interval: n outside 1..N");
  return {0.5 * (1.0 + x_at(n - 1)), 0.5 * (1.0 + x_at(n - 2))};
}

double BranchDecomposition::inverse_branch(Index n, double y_target) const {
  require(n >= 1 && n <= N, "BranchDecomposition::inverse_branch: n outside 1..N");
  require(y_target >= 0.5 && y_target <= 1.0, "BranchDecomposition::inverse_branch: target outside Y");
  double u = y_target;
  for (Index k = 1; k < n; ++k) u = maps::lsv_left_inverse(gamma, u);
  return 0.5 * (1.0 + u);
}

Index BranchDecomposition::phi(double y) const {
  require(y >= 0.5 && y <= 1.0, "BranchDecomposition::phi: y outside Y");
  double t = 2.0 * y - 1.0;
  Index n = 1;
  while (t < 0.5 && n <= N) {
    t = maps::lsv_left(gamma, t);
    ++n;
  }
  return n;
}

BranchDecomposition branch_intervals(double gamma, Index N) {
  require(gamma > 0.0 && gamma < 1.0, "branch_intervals: gamma must lie in (0,1)");
  require(N >= 1, "branch_intervals: N must be at least 1");
  BranchDecomposition dec;
  dec.gamma = gamma;
  dec.N = N;
  dec.x.resize(static_cast<std::size_t>(N + 2));
  dec.x[0] = 1.0;
  dec.x[1] = 0.5;
  for (Index k = 1; k <= N; ++k) dec.x[static_cast<std::size_t>(k + 1)] = maps::lsv_left_inverse(gamma, dec.x[static_cast<std::size_t>(k)]);
  return dec;
}

double UlamModel::cell_tail(Index i, Index r) const {
  require(r >= 0 && r <= N, "UlamModel::cell_tail: level outside 0..N");
  const double md = static_cast<double>(m);
  return 0.5 * overlap_len(0.0, dec.x_at(r - 1), static_cast<double>(i) / md, static_cast<double>(i + 1) / md);
}

double UlamModel::tail_sum(Index n) const {
  double s = tail_remainder;
  for (Index j = tail_phi.size() - 1; j > n; --j) s += tail_phi(j);
  return s;
}

RealSeq UlamModel::b(Index n_max) const {
  require(n_max >= 0 && n_max < tail_phi.size(), "UlamModel::b: n_max outside the tail table");
  const RealSeq full = seq::b_seq(tail_phi, mean_phi);
  return (full.head(n_max + 1).array() + tail_remainder / mean_phi).matrix();
}

UlamModel ulam_R(const BranchDecomposition& dec, Index m, const UlamOptions& opt) {
  require(m >= 64 && m % 2 == 0, "ulam_R: m must be even and at least 64");
  require(dec.N >= 2, "ulam_R: need at least two branches");
  UlamModel model;
  model.m = m;
  model.N = dec.N;
  model.gamma = dec.gamma;
  model.dec = dec;
  model.dy = 0.5 / static_cast<double>(m);
  const double md = static_cast<double>(m);

  // g[i] = inverse branch of the current n evaluated at the target grid point i/m, in u.
  std::vector<double> g(static_cast<std::size_t>(m + 1));
  for (Index i = 0; i <= m; ++i) g[static_cast<std::size_t>(i)] = 0.5 * (1.0 + static_cast<double>(i) / md);
  model.R_total = Eigen::MatrixXd::Zero(m, m);
  std::vector<double> g_last;
  for (Index n = 1; n <= dec.N; ++n) {
    if (n > 1)
      for (auto& t : g) t = maps::lsv_left_inverse(dec.gamma, t);
    model.R.push_back(assemble_block(g, m, dec.x_at(n - 1), dec.x_at(n - 2)));
    add_block(model.R_total, model.R.back());
    if (n == dec.N) g_last = g;
  }

  // Branches beyond N share the shape of branch N on the leftover interval [0, x_{N-1}).
  {
    const double lo = 0.0, hi = dec.x_at(dec.N - 1);
    const double width_N = dec.x_at(dec.N - 2) - dec.x_at(dec.N - 1);
    BranchBlock blk;
    blk.col0 = 0;
    const Index c = std::max<Index>(1, static_cast<Index>(std::ceil(hi * md)));
    blk.M = Eigen::MatrixXd::Zero(m, c);
    blk.overlap.resize(c);
    for (Index k = 0; k < c; ++k) blk.overlap(k) = 0.5 * overlap_len(lo, hi, static_cast<double>(k) / md, static_cast<double>(k + 1) / md);
    for (Index i = 0; i < m; ++i) {
      const double share = (g_last[static_cast<std::size_t>(i + 1)] - g_last[static_cast<std::size_t>(i)]) / width_N;
      for (Index k = 0; k < c; ++k) blk.M(i, k) = share * md * 2.0 * blk.overlap(k);
    }
    model.tail = blk;
    add_block(model.R_total, blk);
  }

  Eigen::VectorXd rho = Eigen::VectorXd::Constant(m, 2.0);
  bool converged = false;
  for (int it = 1; it <= opt.power_max_iter; ++it) {
    Eigen::VectorXd next = model.R_total * rho;
    next /= next.sum() * model.dy;
    const double change = (next - rho).cwiseAbs().maxCoeff();
    rho = std::move(next);
    if (change <= opt.power_tol * rho.cwiseAbs().maxCoeff()) {
      model.power_iterations = it;
      converged = true;
      break;
    }
  }
  if (!converged) throw ConvergenceError("ulam_R: power iteration did not converge");
  require((rho.array() > 0.0).all(), "ulam_R: invariant density is not positive");
  model.rho = rho;

  model.branch_mass = RealSeq::Zero(dec.N + 1);
  for (Index n = 1; n <= dec.N; ++n) {
    const auto& blk = model.R[static_cast<std::size_t>(n - 1)];
    model.branch_mass(n) = rho.segment(blk.col0, blk.overlap.size()).dot(blk.overlap);
  }
  std::int64_t g_cd = 0;
  for (Index n = 1; n <= dec.N; ++n)
    if (model.branch_mass(n) > 0.0) g_cd = std::gcd(g_cd, static_cast<std::int64_t>(n));
  model.gcd = g_cd;
  if (g_cd != 1) throw GeometryError("ulam_R: return-time gcd is not 1");

  // mu_Y(phi > n) = M(x_{n-1}) with M(u) = mu_Y{2y - 1 < u}, on an extended table of x_k.
  std::vector<double> cum(static_cast<std::size_t>(m + 1), 0.0);
  for (Index j = 0; j < m; ++j) cum[static_cast<std::size_t>(j + 1)] = cum[static_cast<std::size_t>(j)] + rho(j) * model.dy;
  auto M = [&](double u) {
    const Index j = std::min<Index>(m - 1, static_cast<Index>(std::floor(u * md)));
    return cum[static_cast<std::size_t>(j)] + rho(j) * 0.5 * (u - static_cast<double>(j) / md);
  };
  const Index K = std::max<Index>(opt.extended_table, dec.N + 1);
  model.tail_phi.resize(K + 1);
  double xk = 1.0;  // x_{n-1}
  for (Index n = 0; n <= K; ++n) {
    if (n == 1) xk = 0.5;
    else if (n > 1) xk = n - 1 <= dec.N ? dec.x_at(n - 1) : maps::lsv_left_inverse(dec.gamma, xk);
    model.tail_phi(n) = n == 0 ? 1.0 : M(xk);
  }
  // Beyond K the x_k follow x_K (K/k)^beta; Euler-Maclaurin for the sum over k >= K.
  const double beta = 1.0 / dec.gamma;
  const double x_K = maps::lsv_left_inverse(dec.gamma, xk);
  model.tail_remainder = 0.5 * rho(0) * x_K * (0.5 + static_cast<double>(K) / (beta - 1.0));
  model.mean_phi = model.tail_phi.sum() + model.tail_remainder;
  return model;
}

Eigen::VectorXd apply_R(const UlamModel& model, Index n, const Eigen::VectorXd& v) {
  require(n >= 1 && n <= model.N, "apply_R: n outside 1..N");
  require(v.size() == model.m, "apply_R: grid size mismatch");
  const auto& blk = model.R[static_cast<std::size_t>(n - 1)];
  return blk.M * v.segment(blk.col0, blk.M.cols());
}

RenewalSequence renewal_T(const UlamModel& model, Index n_max) {
  require(n_max >= 0, "renewal_T: n_max must be nonnegative");
  require(n_max <= model.N, "renewal_T: n_max exceeds the available R(n)");
  const Index m = model.m;
  RenewalSequence out;
  out.T.reserve(static_cast<std::size_t>(n_max + 1));
  out.T.push_back(Eigen::MatrixXd::Identity(m, m));

  // All R(j) blocks side by side; T(n) = A[:, :S_n] * stack_j T(n-j)[cols of R(j), :].
  std::vector<Index> offset(static_cast<std::size_t>(n_max + 1), 0);
  for (Index j = 1; j <= n_max; ++j) offset[static_cast<std::size_t>(j)] = offset[static_cast<std::size_t>(j - 1)] + model.R[static_cast<std::size_t>(j - 1)].M.cols();
  const Index S = offset[static_cast<std::size_t>(n_max)];
  Eigen::MatrixXd A(m, S);
  for (Index j = 1; j <= n_max; ++j) A.middleCols(offset[static_cast<std::size_t>(j - 1)], model.R[static_cast<std::size_t>(j - 1)].M.cols()) = model.R[static_cast<std::size_t>(j - 1)].M;
  Eigen::MatrixXd B(S, m);
  for (Index n = 1; n <= n_max; ++n) {
    const Index Sn = offset[static_cast<std::size_t>(n)];
    for (Index j = 1; j <= n; ++j) {
      const auto& blk = model.R[static_cast<std::size_t>(j - 1)];
      B.middleRows(offset[static_cast<std::size_t>(j - 1)], blk.M.cols()) = out.T[static_cast<std::size_t>(n - j)].middleRows(blk.col0, blk.M.cols());
    }
    Eigen::MatrixXd Tn(m, m);
    Tn.noalias() = A.leftCols(Sn) * B.topRows(Sn);
    out.T.push_back(std::move(Tn));
  }

  out.b = model.b(n_max);
  out.residual.resize(n_max + 1);
  const Eigen::ArrayXd rho = model.rho.array();
  const Eigen::RowVectorXd p_row = (model.rho * (model.dy / model.mean_phi)).transpose();
  for (Index n = 0; n <= n_max; ++n) {
    const auto& T = out.T[static_cast<std::size_t>(n)];
    double worst = 0.0;
    for (Index i = 0; i < m; ++i) {
      const double row = ((T.row(i).array() * rho.transpose() / rho(i)) - out.b(n) * p_row.array()).abs().sum();
      worst = std::max(worst, row);
    }
    out.residual(n) = worst;
  }
  return out;
}

RealSeq renewal_scalar(const RealSeq& r, Index n_max) {
  require(n_max >= 0 && r.size() > n_max, "renewal_scalar: r must cover 1..n_max");
  RealSeq t = RealSeq::Zero(n_max + 1);
  t(0) = 1.0;
  for (Index n = 1; n <= n_max; ++n)
    for (Index j = 1; j <= n; ++j) t(n) += r(j) * t(n - j);
  return t;
}

namespace {

void check_observables(const UlamModel& model, const TowerObservable& v, const TowerObservable& w, Index n_max) {
  require(v.rows() == model.m && w.rows() == model.m, "tower observables must have one row per cell");
  require(v.cols() >= 1 && v.cols() == w.cols(), "tower observables must have the same number of levels");
  require(n_max >= 0 && v.cols() + n_max <= model.N, "tower correlation needs L + n_max <= N");
  require(v.allFinite() && w.allFinite(), "tower observables must be finite");
}

}  // namespace

RealSeq tower_correlation_direct(const UlamModel& model, const TowerObservable& v, const TowerObservable& w, Index n_max) {
  check_observables(model, v, w, n_max);
  const Index L = v.cols();
  const double inv_mean = 1.0 / model.mean_phi;
  // Branch n' keeps a c x n' matrix of piece masses; level l at time t lives in column (l - t) mod n'.
  std::vector<Eigen::MatrixXd> mass(static_cast<std::size_t>(model.N));
  for (Index n = 1; n <= model.N; ++n) {
    const auto& blk = model.R[static_cast<std::size_t>(n - 1)];
    auto& M = mass[static_cast<std::size_t>(n - 1)];
    M = Eigen::MatrixXd::Zero(blk.M.cols(), n);
    for (Index k = 0; k < blk.M.cols(); ++k) {
      const Index j = blk.col0 + k;
      for (Index l = 0; l < std::min(L, n); ++l) M(k, l) = v(j, l) * model.rho(j) * blk.overlap(k) * inv_mean;
    }
  }
  const Index H = L + n_max + 1;
  const auto& tb = model.tail;
  Eigen::MatrixXd tail_mass = Eigen::MatrixXd::Zero(tb.M.cols(), H);
  for (Index k = 0; k < tb.M.cols(); ++k)
    for (Index l = 0; l < L; ++l) tail_mass(k, l) = v(k, l) * model.rho(k) * tb.overlap(k) * inv_mean;

  auto col = [](Index level, Index t, Index period) { return ((level - t) % period + period) % period; };
  RealSeq out(n_max + 1);
  Eigen::VectorXd ret(model.m);
  for (Index t = 0;; ++t) {
    double acc = 0.0;
    for (Index n = 1; n <= model.N; ++n) {
      const auto& blk = model.R[static_cast<std::size_t>(n - 1)];
      const auto& M = mass[static_cast<std::size_t>(n - 1)];
      for (Index l = 0; l < std::min(L, n); ++l) {
        const Index c = col(l, t, n);
        for (Index k = 0; k < blk.M.cols(); ++k) acc += M(k, c) * w(blk.col0 + k, l);
      }
    }
    for (Index l = 0; l < L; ++l) {
      const Index c = col(l, t, H);
      for (Index k = 0; k < tb.M.cols(); ++k) acc += tail_mass(k, c) * w(k, l);
    }
    out(t) = acc;
    if (t == n_max) break;

    // Mass on the top level of each branch returns to Y through R(n').
    ret.setZero();
    for (Index n = 1; n <= model.N; ++n) {
      const auto& blk = model.R[static_cast<std::size_t>(n - 1)];
      const auto& M = mass[static_cast<std::size_t>(n - 1)];
      const Index c = col(n - 1, t, n);
      Eigen::VectorXd dens(blk.M.cols());
      for (Index k = 0; k < blk.M.cols(); ++k) dens(k) = blk.overlap(k) > 0.0 ? M(k, c) / blk.overlap(k) : 0.0;
      ret.noalias() += blk.M * dens;
    }
    for (Index n = 1; n <= model.N; ++n) {
      const auto& blk = model.R[static_cast<std::size_t>(n - 1)];
      auto& M = mass[static_cast<std::size_t>(n - 1)];
      const Index c = col(0, t + 1, n);
      for (Index k = 0; k < blk.M.cols(); ++k) M(k, c) = ret(blk.col0 + k) * blk.overlap(k);
    }
    const Index c = col(0, t + 1, H);
    for (Index k = 0; k < tb.M.cols(); ++k) tail_mass(k, c) = ret(k) * tb.overlap(k);
  }
  return out;
}

TowerPair tower_correlation_pair(const UlamModel& model, const TowerObservable& v, const TowerObservable& w, Index n_max,
                                 const RenewalSequence* Tseq) {
  check_observables(model, v, w, n_max);
  const Index L = v.cols();
  const Index m = model.m;
  const double inv_mean = 1.0 / model.mean_phi;
  TowerPair out;
  out.rho_direct = tower_correlation_direct(model, v, w, n_max);

  RenewalSequence local;
  if (Tseq == nullptr || static_cast<Index>(Tseq->T.size()) < n_max) {
    local = renewal_T(model, std::max<Index>(0, n_max - 1));
    Tseq = &local;
  }
  // U(a) = R(rho V(a)): mass that first reaches the base after a steps.
  std::vector<Eigen::VectorXd> U(static_cast<std::size_t>(n_max + 1), Eigen::VectorXd::Zero(m));
  for (Index a = 1; a <= n_max; ++a) {
    for (Index n = a; n <= std::min(model.N, a + L - 1); ++n) {
      Eigen::VectorXd q = model.rho.cwiseProduct(v.col(n - a));
      U[static_cast<std::size_t>(a)] += apply_R(model, n, q);
    }
  }
  // G(k) = sum_{i<k} T(i) U(k-i): mass on the base at time k after at least one return.
  std::vector<Eigen::VectorXd> G(static_cast<std::size_t>(n_max + 1), Eigen::VectorXd::Zero(m));
  for (Index k = 1; k <= n_max; ++k)
    for (Index i = 0; i < k; ++i) G[static_cast<std::size_t>(k)].noalias() += Tseq->T[static_cast<std::size_t>(i)] * U[static_cast<std::size_t>(k - i)];

  out.rho_renewal.resize(n_max + 1);
  for (Index n = 0; n <= n_max; ++n) {
    double j0 = 0.0;
    for (Index l = 0; l + n < L; ++l)
      for (Index j = 0; j < m; ++j) j0 += model.rho(j) * v(j, l) * w(j, l + n) * model.cell_tail(j, l + n);
    double conv = 0.0;
    for (Index k = 1; k <= n; ++k) {
      const Index r = n - k;
      if (r >= L) continue;
      for (Index i = 0; i < m; ++i) conv += G[static_cast<std::size_t>(k)](i) * w(i, r) * model.cell_tail(i, r);
    }
    out.rho_renewal(n) = inv_mean * (j0 + conv);
  }

  out.deficit = model.tail_sum(model.N - 1) * inv_mean;
  if (out.deficit > 0.01) out.warning = "tower truncation deficit " + std::to_string(out.deficit) + " exceeds 1% of mass";
  return out;
}

TowerObservable indicator_Y(const UlamModel& model) { return TowerObservable::Ones(model.m, 1); }

TowerObservable centered_indicator_Y(const UlamModel& model) {
  const Index half = model.m / 2;
  const double mass_branch1 = model.rho.tail(model.m - half).sum() * model.dy;
  TowerObservable v = TowerObservable::Ones(model.m, 1);
  v.col(0).tail(model.m - half).array() -= 1.0 / mass_branch1;
  return v;
}

double tower_mean(const UlamModel& model, const TowerObservable& v) {
  require(v.rows() == model.m && v.cols() <= model.N, "tower_mean: observable shape mismatch");
  double s = 0.0;
  for (Index l = 0; l < v.cols(); ++l)
    for (Index j = 0; j < model.m; ++j) s += v(j, l) * model.rho(j) * model.cell_tail(j, l);
  return s / model.mean_phi;
}

}  // namespace sharpdecay::renewal
