// Power-law (optionally times a fixed power of log n) fits to decaying
// sequences, and plateau constants of compensated sequences.
#ifndef SHARPDECAY_FITKIT_HPP
#define SHARPDECAY_FITKIT_HPP

#include <optional>
#include <string>
#include <vector>

#include "sharpdecay/seqkit.hpp"

namespace sharpdecay::fit {

using seq::Index;
using seq::RealSeq;

struct DecayFit {
  double p = 0.0;  // y ~ c n^{-p} (log n)^s
  int s = 0;
  double c = 0.0;
  double stderr_p = 0.0;
  double stderr_c = 0.0;
  Index n_lo = 0, n_hi = 0;
  bool weighted = false;
  Index points = 0;
  Index excluded = 0;  // non-positive values dropped from the window
  double residual_rms = 0.0;
};

/// Least squares of log y_n - s log log n = log c - p log n over n in
/// [n_lo, n_hi]. With `std_error` the fit is weighted by (y/stderr)^2 and
/// the parameter errors come from the known variances; otherwise they come
/// from the residual scatter.
DecayFit loglog_fit(const RealSeq& y, Index n_lo, Index n_hi, int log_power = 0,
                    const std::optional<RealSeq>& std_error = std::nullopt);

struct Plateau {
  double c = 0.0;
  double variation = 0.0;  // (max - min) / |mean|
};

/// Window mean of y_n n^p / (log n)^s.
Plateau plateau_constant(const RealSeq& y, double p, int log_power, Index n_lo, Index n_hi);

/// Means of y_n n^p over `blocks` consecutive sub-windows of [n_lo, n_hi].
std::vector<double> compensated_block_means(const RealSeq& y, double p, Index n_lo, Index n_hi, int blocks);

/// One-line JSON record for a fit.
std::string fit_record_json(const std::string& experiment, const DecayFit& f, std::optional<double> variation = std::nullopt);

}  // namespace sharpdecay::fit

#endif  // SHARPDECAY_FITKIT_HPP
