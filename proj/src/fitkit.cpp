#include "sharpdecay/fitkit.hpp"

#include <cmath>
#include "json.hpp"

namespace sharpdecay::fit {

DecayFit loglog_fit(const RealSeq& y, Index n_lo, Index n_hi, int log_power, const std::optional<RealSeq>& std_error) {
  require(n_lo >= 2, "loglog_fit: window must start at n >= 2");
  require(n_hi < y.size() && n_lo <= n_hi, "loglog_fit: window outside the sequence");
  require(n_hi - n_lo + 1 >= 8, "loglog_fit: window has fewer than 8 points");
  require(log_power >= 0, "loglog_fit: log power must be nonnegative");
  if (std_error) require(std_error->size() == y.size(), "loglog_fit: stderr length mismatch");

  DecayFit f;
  f.s = log_power;
  f.n_lo = n_lo;
  f.n_hi = n_hi;
  f.weighted = std_error.has_value();
  // Normal equations for z = a + b t with t = -log n, a = log c, b = p.
  double S = 0, St = 0, Stt = 0, Sz = 0, Stz = 0;
  std::vector<double> ts, zs, ws;
  for (Index n = n_lo; n <= n_hi; ++n) {
    if (!(y(n) > 0.0)) {
      ++f.excluded;
      continue;
    }
    const double ln = std::log(static_cast<double>(n));
    const double t = -ln;
    const double z = std::log(y(n)) - log_power * std::log(ln);
    double wgt = 1.0;
    if (std_error) {
      const double se = (*std_error)(n);
      require(se > 0.0, "loglog_fit: standard errors must be positive");
      wgt = (y(n) / se) * (y(n) / se);
    }
    ts.push_back(t);
    zs.push_back(z);
    ws.push_back(wgt);
    S += wgt;
    St += wgt * t;
    Stt += wgt * t * t;
    Sz += wgt * z;
    Stz += wgt * t * z;
  }
  const Index total = n_hi - n_lo + 1;
  if (5 * f.excluded > total) throw InvalidArgument("loglog_fit: more than 20% of the window is non-positive");
  f.points = static_cast<Index>(ts.size());
  require(f.points >= 3, "loglog_fit: too few positive points");
  const double det = S * Stt - St * St;
  require(det > 0.0, "loglog_fit: degenerate design");
  const double b = (S * Stz - St * Sz) / det;
  const double a = (Stt * Sz - St * Stz) / det;
  double rss = 0.0, wrss = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double r = zs[i] - a - b * ts[i];
    rss += r * r;
    wrss += ws[i] * r * r;
  }
  f.residual_rms = std::sqrt(rss / static_cast<double>(ts.size()));
  const double scale = f.weighted ? 1.0 : wrss / static_cast<double>(ts.size() - 2);
  f.p = b;
  f.c = std::exp(a);
  f.stderr_p = std::sqrt(scale * S / det);
  f.stderr_c = f.c * std::sqrt(scale * Stt / det);
  return f;
}

Plateau plateau_constant(const RealSeq& y, double p, int log_power, Index n_lo, Index n_hi) {
  require(n_lo >= 2 && n_lo <= n_hi && n_hi < y.size(), "plateau_constant: window outside the sequence");
  double sum = 0.0, lo = INFINITY, hi = -INFINITY;
  int sign = 0;
  for (Index n = n_lo; n <= n_hi; ++n) {
    const double ln = std::log(static_cast<double>(n));
    const double z = y(n) * std::pow(static_cast<double>(n), p) / std::pow(ln, log_power);
    const int sg = z > 0.0 ? 1 : (z < 0.0 ? -1 : 0);
    if (sg == 0 || (sign != 0 && sg != sign)) throw InvalidArgument("plateau_constant: sequence changes sign in the window");
    sign = sg;
    sum += z;
    lo = std::min(lo, z);
    hi = std::max(hi, z);
  }
  Plateau out;
  out.c = sum / static_cast<double>(n_hi - n_lo + 1);
  out.variation = (hi - lo) / std::abs(out.c);
  return out;
}

std::vector<double> compensated_block_means(const RealSeq& y, double p, Index n_lo, Index n_hi, int blocks) {
  require(blocks >= 1 && n_lo >= 1 && n_lo <= n_hi && n_hi < y.size(), "compensated_block_means: bad window");
  require(n_hi - n_lo + 1 >= blocks, "compensated_block_means: more blocks than points");
  std::vector<double> out;
  const Index len = n_hi - n_lo + 1;
  for (int b = 0; b < blocks; ++b) {
    const Index a = n_lo + len * b / blocks, e = n_lo + len * (b + 1) / blocks;
    double s = 0.0;
    for (Index n = a; n < e; ++n) s += y(n) * std::pow(static_cast<double>(n), p);
    out.push_back(s / static_cast<double>(e - a));
  }
  return out;
}

std::string fit_record_json(const std::string& experiment, const DecayFit& f, std::optional<double> variation) {
  nlohmann::ordered_json j;
  j["experiment"] = experiment;
  j["p"] = f.p;
  j["s"] = f.s;
  j["c"] = f.c;
  j["stderr_p"] = f.stderr_p;
  j["stderr_c"] = f.stderr_c;
  j["window"] = {f.n_lo, f.n_hi};
  if (variation) j["variation"] = *variation;
  else j["variation"] = nullptr;
  return j.dump();
}

}  // namespace sharpdecay::fit
