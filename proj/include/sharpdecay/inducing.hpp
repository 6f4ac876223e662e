// First-return machinery: return times h and the return map f_X, empirical
// return-time tails, induced return times built from h along f_X-orbits, and
// normalized Birkhoff sums of h.
//
// A system is any type with the orbit-system interface of dynmaps.hpp
// (State, step, random_point, in_X, is_degenerate). Systems that can sample
// mu_X exactly expose sample_X and are sampled i.i.d.; the others are sampled
// by thinning long orbits of the invariant measure to their visits in X.
#ifndef SHARPDECAY_INDUCING_HPP
#define SHARPDECAY_INDUCING_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sharpdecay/core.hpp"
#include "sharpdecay/dynmaps.hpp"
#include "sharpdecay/seqkit.hpp"

namespace sharpdecay::inducing {

template <class System>
concept HasExactXSampler = requires(const System& s, CounterRng& rng) { s.sample_X(rng); };

template <class System>
struct InducedSystem {
  System base;
  std::int64_t cap = 10'000'000;  // iterations before a return is censored

  InducedSystem(System b, std::int64_t c) : base(std::move(b)), cap(c) {
    require(cap >= 1, "InducedSystem: cap must be at least 1");
  }
};

template <class State>
struct Return {
  std::int64_t h = 0;  // return time; cap when censored
  State x;             // f^h x, or the last state reached when censored
  bool censored = false;
};

/// h(x) = inf{n >= 1 : f^n x in X} and f_X x, or a censored value after cap
/// iterations. Resample exceptions from the base map propagate.
template <class System>
Return<typename System::State> first_return(const InducedSystem<System>& sys, const typename System::State& x) {
  if (!sys.base.in_X(x)) throw InvalidArgument("first_return: starting point is not in X");
  typename System::State y = x;
  for (std::int64_t n = 1; n <= sys.cap; ++n) {
    y = sys.base.step(y);
    if (sys.base.is_degenerate(y)) throw Resample("first_return: orbit reached a fixed point");
    if (sys.base.in_X(y)) return {n, y, false};
  }
  return {sys.cap, y, true};
}

struct TailEstimate {
  seq::RealSeq survival;            // survival(n) = fraction of samples with h > n
  std::vector<std::int64_t> counts;  // counts[n] = number of samples with h > n
  seq::RealSeq halfwidth;           // 95% Wilson half-widths
  std::int64_t n_samples = 0;
  std::int64_t censored = 0;
  std::int64_t resampled = 0;
  double censored_fraction = 0.0;
  double mean_h = 0.0;  // over uncensored samples
  bool orbit_thinning = false;
};

struct TailOptions {
  std::int64_t n_max = 1000;
  std::int64_t n_samples = 100'000;
  std::int64_t burn_in = 10'000;  // orbit-thinning mode only
  std::int64_t chunk = 1 << 16;   // samples per random stream
  int workers = 0;
};

namespace detail {

/// Source of mu_X-distributed points for one random stream: i.i.d. draws
/// when the system samples X exactly, consecutive f_X iterates along one
/// burnt-in orbit otherwise.
template <class System>
class XStream {
 public:
  using State = typename System::State;

  XStream(const InducedSystem<System>& sys, std::uint64_t seed, std::uint64_t stream, std::int64_t burn_in)
      : sys_(sys), rng_(seed, stream), burn_in_(burn_in) {}

  /// Next point of X together with its return, restarting after Resample.
  Return<State> next(std::int64_t& resampled) {
    for (;;) {
      try {
        if constexpr (HasExactXSampler<System>) {
          const State x = sys_.base.sample_X(rng_);
          auto r = first_return(sys_, x);
          last_start_ = x;
          return r;
        } else {
          if (!current_) enter();
          auto r = first_return(sys_, *current_);
          last_start_ = *current_;
          if (r.censored) {
            current_.reset();
          } else {
            current_ = r.x;
          }
          return r;
        }
      } catch (const Resample&) {
        ++resampled;
        if constexpr (!HasExactXSampler<System>) current_.reset();
      }
    }
  }

  const State& last_start() const { return *last_start_; }

 private:
  void enter() {
    State x = sys_.base.random_point(rng_);
    for (std::int64_t t = 0; t < burn_in_ || !sys_.base.in_X(x); ++t) {
      x = sys_.base.step(x);
      if (sys_.base.is_degenerate(x)) throw Resample("orbit reached a fixed point during burn-in");
      if (t > burn_in_ + sys_.cap) throw ConvergenceError("orbit does not enter X");
    }
    current_ = x;
  }

  const InducedSystem<System>& sys_;
  CounterRng rng_;
  std::int64_t burn_in_;
  std::optional<State> current_;
  std::optional<State> last_start_;
};

struct TailPart {
  std::vector<std::int64_t> hist;  // hist[n] = #samples with h == n, n <= n_max; hist[n_max+1] = h > n_max
  std::int64_t censored = 0, resampled = 0;
  double sum_h = 0.0;
  std::int64_t uncensored = 0;
};

}  // namespace detail

/// Empirical mu_X(h > n) for n = 0..n_max with Wilson intervals.
template <class System>
TailEstimate return_tail(const InducedSystem<System>& sys, const TailOptions& opt, std::uint64_t seed) {
  require(opt.n_max >= 1 && opt.n_samples >= 1 && opt.chunk >= 1, "return_tail: n_max, n_samples and chunk must be positive");
  const std::int64_t n_chunks = (opt.n_samples + opt.chunk - 1) / opt.chunk;
  auto parts = map_streams(static_cast<std::size_t>(n_chunks), opt.workers, [&](std::size_t c) {
    detail::TailPart part;
    part.hist.assign(static_cast<std::size_t>(opt.n_max + 2), 0);
    const std::int64_t todo = std::min(opt.chunk, opt.n_samples - static_cast<std::int64_t>(c) * opt.chunk);
    detail::XStream<System> src(sys, seed, stream_id(3, c), opt.burn_in);
    for (std::int64_t i = 0; i < todo; ++i) {
      const auto r = src.next(part.resampled);
      if (r.censored) {
        ++part.censored;
      } else {
        part.sum_h += static_cast<double>(r.h);
        ++part.uncensored;
      }
      ++part.hist[static_cast<std::size_t>(r.censored ? opt.n_max + 1 : std::min(r.h, opt.n_max + 1))];
    }
    return part;
  });
  const auto total = tree_reduce(std::move(parts), [](detail::TailPart a, detail::TailPart b) {
    for (std::size_t i = 0; i < a.hist.size(); ++i) a.hist[i] += b.hist[i];
    a.censored += b.censored;
    a.resampled += b.resampled;
    a.sum_h += b.sum_h;
    a.uncensored += b.uncensored;
    return a;
  });
  if (total.censored == opt.n_samples) throw ConvergenceError("return_tail: every sample was censored");

  TailEstimate est;
  est.n_samples = opt.n_samples;
  est.censored = total.censored;
  est.resampled = total.resampled;
  est.censored_fraction = static_cast<double>(total.censored) / static_cast<double>(opt.n_samples);
  est.mean_h = total.sum_h / static_cast<double>(total.uncensored);
  est.orbit_thinning = !HasExactXSampler<System>;
  est.survival.resize(opt.n_max + 1);
  est.halfwidth.resize(opt.n_max + 1);
  est.counts.assign(static_cast<std::size_t>(opt.n_max + 1), 0);
  std::int64_t above = opt.n_samples;
  for (std::int64_t n = 0; n <= opt.n_max; ++n) {
    above -= total.hist[static_cast<std::size_t>(n)];
    est.counts[static_cast<std::size_t>(n)] = above;
    const double N = static_cast<double>(opt.n_samples);
    est.survival(n) = static_cast<double>(above) / N;
    est.halfwidth(n) = wilson_halfwidth(static_cast<double>(above), N);
  }
  return est;
}

/// phi = h_0 + ... + h_{sigma-1} for the return times along the f_X-orbit.
std::int64_t induced_phi(const std::vector<std::int64_t>& h_sequence, std::int64_t sigma);

/// Number of times the f-orbit of y visits X at times 0..phi-1.
template <class System>
std::int64_t visits_before(const System& sys, typename System::State y, std::int64_t phi) {
  std::int64_t visits = 0;
  for (std::int64_t t = 0; t < phi; ++t) {
    if (sys.in_X(y)) ++visits;
    y = sys.step(y);
  }
  return visits;
}

// ---------------------------------------------------------------------------
// Normalized Birkhoff sums of h along f_X-orbits.

enum class Scaling { SqrtN, NLogNSqrt, NPowOneOverBeta };

/// b_n for the given scaling (beta used only by NPowOneOverBeta).
double birkhoff_scale(Scaling s, double n, double beta = 2.0);
Scaling parse_scaling(const std::string& name);

struct BirkhoffOptions {
  std::int64_t n = 10'000;
  std::int64_t n_samples = 10'000;
  Scaling scaling = Scaling::SqrtN;
  double beta = 2.0;
  std::int64_t burn_in = 10'000;
  std::int64_t chunk = 256;  // samples per random stream
  int workers = 0;
};

struct BirkhoffResult {
  std::vector<double> values;  // (S_n h - n h_bar) / b_n
  Moments moments;
  double h_bar = 0.0;  // empirical mean return time
  std::int64_t dropped = 0;
  std::int64_t resampled = 0;
};

template <class System>
BirkhoffResult normalized_birkhoff(const InducedSystem<System>& sys, const BirkhoffOptions& opt, std::uint64_t seed) {
  require(opt.n >= 2, "normalized_birkhoff: n must be at least 2");
  require(opt.n_samples >= 4 && opt.chunk >= 1, "normalized_birkhoff: need at least 4 samples");
  struct Part {
    std::vector<double> sums;
    std::int64_t dropped = 0, resampled = 0;
  };
  const std::int64_t n_chunks = (opt.n_samples + opt.chunk - 1) / opt.chunk;
  auto parts = map_streams(static_cast<std::size_t>(n_chunks), opt.workers, [&](std::size_t c) {
    Part part;
    const std::int64_t todo = std::min(opt.chunk, opt.n_samples - static_cast<std::int64_t>(c) * opt.chunk);
    CounterRng rng(seed, stream_id(4, c));
    std::optional<detail::XStream<System>> orbit;
    if constexpr (!HasExactXSampler<System>) orbit.emplace(sys, seed, stream_id(5, c), opt.burn_in);
    for (std::int64_t i = 0; i < todo; ++i) {
      std::int64_t sum = 0;
      bool ok = true;
      if constexpr (HasExactXSampler<System>) {
        for (;;) {
          try {
            auto x = sys.base.sample_X(rng);
            sum = 0;
            for (std::int64_t j = 0; j < opt.n && ok; ++j) {
              const auto r = first_return(sys, x);
              if (r.censored) ok = false;
              sum += r.h;
              x = r.x;
            }
            break;
          } catch (const Resample&) {
            ++part.resampled;
            ok = true;
          }
        }
      } else {
        for (std::int64_t j = 0; j < opt.n && ok; ++j) {
          const auto r = orbit->next(part.resampled);
          if (r.censored) ok = false;
          sum += r.h;
        }
      }
      if (ok) {
        part.sums.push_back(static_cast<double>(sum));
      } else {
        ++part.dropped;
      }
    }
    return part;
  });
  const auto total = tree_reduce(std::move(parts), [](Part a, Part b) {
    a.sums.insert(a.sums.end(), b.sums.begin(), b.sums.end());
    a.dropped += b.dropped;
    a.resampled += b.resampled;
    return a;
  });
  require(total.sums.size() >= 4, "normalized_birkhoff: fewer than 4 uncensored samples");
  BirkhoffResult res;
  res.dropped = total.dropped;
  res.resampled = total.resampled;
  double grand = 0.0;
  for (double s : total.sums) grand += s;
  const double n = static_cast<double>(opt.n);
  res.h_bar = grand / (n * static_cast<double>(total.sums.size()));
  const double bn = birkhoff_scale(opt.scaling, n, opt.beta);
  res.values.reserve(total.sums.size());
  for (double s : total.sums) res.values.push_back((s - n * res.h_bar) / bn);
  res.moments = sample_moments(res.values);
  return res;
}

/// Monte Carlo estimate of mu(X) with its standard error: exact mu samples
/// when `exact` is set (billiards), otherwise the visit frequency of X
/// along burnt-in orbits, with batch-means errors across streams.
struct MeasureEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

template <class System>
MeasureEstimate estimate_measure_X(const System& sys, std::int64_t n_samples, std::uint64_t seed, std::int64_t burn_in = 10'000,
                                   int workers = 0, std::int64_t n_streams = 32) {
  require(n_samples >= n_streams && n_streams >= 2, "estimate_measure_X: need at least one sample per stream");
  const std::int64_t per = n_samples / n_streams;
  auto fractions = map_streams(static_cast<std::size_t>(n_streams), workers, [&](std::size_t c) {
    CounterRng rng(seed, stream_id(6, c));
    std::int64_t hits = 0;
    if constexpr (System::exact_mu_sampling) {
      for (std::int64_t i = 0; i < per; ++i) {
        for (;;) {
          try {
            hits += sys.in_X(sys.random_point(rng)) ? 1 : 0;
            break;
          } catch (const Resample&) {
          }
        }
      }
    } else {
      maps::run_orbit(sys, rng, burn_in, per, [&](const auto& x) { hits += sys.in_X(x) ? 1 : 0; });
    }
    return static_cast<double>(hits) / static_cast<double>(per);
  });
  double mean = 0.0;
  for (double f : fractions) mean += f;
  mean /= static_cast<double>(n_streams);
  double var = 0.0;
  for (double f : fractions) var += (f - mean) * (f - mean);
  var /= static_cast<double>(n_streams - 1);
  return {mean, std::sqrt(var / static_cast<double>(n_streams))};
}

}  // namespace sharpdecay::inducing

#endif  // SHARPDECAY_INDUCING_HPP
