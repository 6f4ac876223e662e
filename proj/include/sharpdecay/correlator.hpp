// Monte Carlo estimation of correlation functions
//   rho_{v,w}(n) = int v . w o f^n dmu - int v dmu int w dmu
// with batch-means standard errors across a fixed set of random streams.
#ifndef SHARPDECAY_CORRELATOR_HPP
#define SHARPDECAY_CORRELATOR_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "sharpdecay/billiards.hpp"
#include "sharpdecay/core.hpp"
#include "sharpdecay/dynmaps.hpp"
#include "sharpdecay/seqkit.hpp"

namespace sharpdecay::correlator {

using seq::Index;
using seq::RealSeq;

enum class Scheme { LongOrbit, Ensemble };

Scheme parse_scheme(const std::string& name);
std::string scheme_name(Scheme s);

struct CorrelationEstimate {
  RealSeq rho;
  RealSeq std_error;
  Index n_max = 0;
  Scheme scheme = Scheme::LongOrbit;
  std::int64_t sample_count = 0;  // pairs per lag
  std::uint64_t seed = 0;
  double mean_v = 0.0;
  double mean_w = 0.0;
  std::int64_t restarts = 0;
  std::int64_t n_streams = 0;
};

struct CorrelationOptions {
  Index n_max = 100;
  std::int64_t n_samples = 1'000'000;  // pairs per lag (long orbit) or i.i.d. samples (ensemble)
  Scheme scheme = Scheme::LongOrbit;
  std::int64_t burn_in = 10'000;
  std::int64_t n_streams = 64;
  int workers = 0;
};

std::string describe_state(double x);
std::string describe_state(const Eigen::Vector2d& p);
std::string describe_state(const maps::DyadicState& s);
std::string describe_state(const billiards::BilliardState& s);

namespace detail {

struct Sums {
  std::int64_t count = 0;
  double sv = 0.0;
  std::vector<double> sw, svw;
  std::int64_t restarts = 0;

  explicit Sums(Index n_max = 0) : sw(static_cast<std::size_t>(n_max + 1), 0.0), svw(static_cast<std::size_t>(n_max + 1), 0.0) {}

  std::vector<double> rho() const {
    const double N = static_cast<double>(count);
    std::vector<double> out(sw.size());
    for (std::size_t n = 0; n < sw.size(); ++n) out[n] = svw[n] / N - (sv / N) * (sw[n] / N);
    return out;
  }
};

template <class State, class Obs>
double checked(const Obs& f, const State& x, const char* which) {
  const double value = f(x);
  if (!std::isfinite(value)) throw InvalidArgument(std::string("observable ") + which + " is not finite at " + describe_state(x));
  return value;
}

/// Successive states of one orbit, restarting from a fresh point (with
/// burn-in) after a Resample or an exact fixed point.
template <class System>
class OrbitCursor {
 public:
  using State = typename System::State;

  OrbitCursor(const System& sys, CounterRng& rng, std::int64_t burn_in) : sys_(sys), rng_(rng), burn_in_(burn_in) { restart(); }

  const State& state() const { return x_; }
  std::int64_t restarts() const { return restarts_; }

  void advance() {
    try {
      x_ = sys_.step(x_);
      if (!sys_.is_degenerate(x_)) return;
    } catch (const Resample&) {
    }
    ++restarts_;
    restart();
  }

 private:
  void restart() {
    for (;;) {
      try {
        x_ = sys_.random_point(rng_);
        std::int64_t t = 0;
        for (; t < burn_in_; ++t) {
          x_ = sys_.step(x_);
          if (sys_.is_degenerate(x_)) break;
        }
        if (t == burn_in_) return;
      } catch (const Resample&) {
      }
      ++restarts_;
    }
  }

  const System& sys_;
  CounterRng& rng_;
  std::int64_t burn_in_;
  State x_{};
  std::int64_t restarts_ = 0;
};

}  // namespace detail

/// Estimates rho_{v,w}(n), n = 0..n_max. The sample set is split into
/// n_streams fixed random streams; the pooled estimate uses all of them and
/// the standard error is the spread of the per-stream estimates.
template <class System>
CorrelationEstimate estimate_rho(const System& sys, const maps::Observable<typename System::State>& v,
                                 const maps::Observable<typename System::State>& w, const CorrelationOptions& opt,
                                 std::uint64_t seed) {
  require(opt.n_max >= 0, "estimate_rho: n_max must be nonnegative");
  require(opt.n_streams >= 2, "estimate_rho: need at least two streams for error bars");
  require(opt.n_samples >= opt.n_streams, "estimate_rho: need at least one sample per stream");
  require(opt.burn_in >= 0, "estimate_rho: burn_in must be nonnegative");
  const Index n_max = opt.n_max;
  const std::size_t lags = static_cast<std::size_t>(n_max + 1);

  auto parts = map_streams(static_cast<std::size_t>(opt.n_streams), opt.workers, [&](std::size_t s) {
    const std::int64_t per = opt.n_samples / opt.n_streams + (static_cast<std::int64_t>(s) < opt.n_samples % opt.n_streams ? 1 : 0);
    detail::Sums sums(n_max);
    CounterRng rng(seed, stream_id(opt.scheme == Scheme::LongOrbit ? 10 : 11, s));
    const std::int64_t burn = System::exact_mu_sampling ? 0 : opt.burn_in;
    if (opt.scheme == Scheme::Ensemble) {
      std::vector<double> wv(lags);
      for (std::int64_t i = 0; i < per; ++i) {
        detail::OrbitCursor<System> cur(sys, rng, burn);
        const double vx = detail::checked(v, cur.state(), "v");
        for (std::size_t n = 0; n < lags; ++n) {
          if (n > 0) cur.advance();
          wv[n] = detail::checked(w, cur.state(), "w");
        }
        sums.restarts += cur.restarts();
        sums.sv += vx;
        for (std::size_t n = 0; n < lags; ++n) {
          sums.sw[n] += wv[n];
          sums.svw[n] += vx * wv[n];
        }
        ++sums.count;
      }
    } else {
      // Look-ahead ring holding v and w at times t..t+n_max.
      detail::OrbitCursor<System> cur(sys, rng, burn);
      std::vector<double> vr(lags), wr(lags);
      for (std::size_t k = 0; k < lags; ++k) {
        if (k > 0) cur.advance();
        vr[k] = detail::checked(v, cur.state(), "v");
        wr[k] = detail::checked(w, cur.state(), "w");
      }
      std::vector<double> head_w(wr);  // w_0..w_{n_max}
      double w_total = 0.0;            // sum of w_t for t < per + n_max, accumulated as they leave the ring
      for (std::int64_t t = 0; t < per; ++t) {
        const std::size_t pos = static_cast<std::size_t>(t % static_cast<std::int64_t>(lags));
        const double vt = vr[pos];
        sums.sv += vt;
        if (vt != 0.0) {
          for (std::size_t n = 0; n < lags; ++n) {
            const std::size_t q = pos + n < lags ? pos + n : pos + n - lags;
            sums.svw[n] += vt * wr[q];
          }
        }
        w_total += wr[pos];
        cur.advance();
        vr[pos] = detail::checked(v, cur.state(), "v");
        wr[pos] = detail::checked(w, cur.state(), "w");
      }
      // sum_{t<per} w_{t+n} = (sum_{t<per} w_t) - (w_0 + .. + w_{n-1}) + (w_per + .. + w_{per+n-1}).
      const std::size_t start = static_cast<std::size_t>(per % static_cast<std::int64_t>(lags));
      double head = 0.0, tail = 0.0;
      for (std::size_t n = 0; n < lags; ++n) {
        sums.sw[n] = w_total - head + tail;
        head += head_w[n];
        const std::size_t q = start + n < lags ? start + n : start + n - lags;
        tail += wr[q];
      }
      sums.count = per;
      sums.restarts = cur.restarts();
    }
    return sums;
  });

  std::vector<std::vector<double>> per_stream;
  per_stream.reserve(parts.size());
  for (const auto& p : parts) per_stream.push_back(p.rho());
  const detail::Sums total = tree_reduce(std::move(parts), [](detail::Sums a, detail::Sums b) {
    a.count += b.count;
    a.sv += b.sv;
    a.restarts += b.restarts;
    for (std::size_t n = 0; n < a.sw.size(); ++n) {
      a.sw[n] += b.sw[n];
      a.svw[n] += b.svw[n];
    }
    return a;
  });

  CorrelationEstimate est;
  est.n_max = n_max;
  est.scheme = opt.scheme;
  est.sample_count = total.count;
  est.seed = seed;
  est.restarts = total.restarts;
  est.n_streams = opt.n_streams;
  est.mean_v = total.sv / static_cast<double>(total.count);
  est.mean_w = total.sw[0] / static_cast<double>(total.count);
  const auto pooled = total.rho();
  est.rho = Eigen::Map<const RealSeq>(pooled.data(), n_max + 1);
  est.std_error.resize(n_max + 1);
  const double S = static_cast<double>(opt.n_streams);
  for (Index n = 0; n <= n_max; ++n) {
    double mean = 0.0;
    for (const auto& r : per_stream) mean += r[static_cast<std::size_t>(n)];
    mean /= S;
    double var = 0.0;
    for (const auto& r : per_stream) var += (r[static_cast<std::size_t>(n)] - mean) * (r[static_cast<std::size_t>(n)] - mean);
    est.std_error(n) = std::sqrt(var / (S - 1.0) / S);
  }
  return est;
}

struct MeanEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Monte Carlo mean of v under mu with a batch-means standard error: exact
/// i.i.d. samples when the system samples mu exactly, burnt-in orbits
/// otherwise.
template <class System>
MeanEstimate mc_mean(const System& sys, const maps::Observable<typename System::State>& v, std::int64_t n_samples,
                     std::uint64_t seed, std::int64_t burn_in = 10'000, std::int64_t n_streams = 64, int workers = 0) {
  require(n_streams >= 2 && n_samples >= n_streams, "mc_mean: need at least one sample in each of two streams");
  auto parts = map_streams(static_cast<std::size_t>(n_streams), workers, [&](std::size_t s) {
    const std::int64_t per = n_samples / n_streams + (static_cast<std::int64_t>(s) < n_samples % n_streams ? 1 : 0);
    CounterRng rng(seed, stream_id(12, s));
    double acc = 0.0;
    if constexpr (System::exact_mu_sampling) {
      for (std::int64_t i = 0; i < per; ++i) {
        detail::OrbitCursor<System> cur(sys, rng, 0);
        acc += detail::checked(v, cur.state(), "v");
      }
    } else {
      detail::OrbitCursor<System> cur(sys, rng, burn_in);
      for (std::int64_t i = 0; i < per; ++i) {
        if (i > 0) cur.advance();
        acc += detail::checked(v, cur.state(), "v");
      }
    }
    return std::pair<double, double>{acc, static_cast<double>(per)};
  });
  double total = 0.0, count = 0.0;
  for (const auto& [acc, per] : parts) {
    total += acc;
    count += per;
  }
  MeanEstimate est;
  est.mean = total / count;
  double var = 0.0;
  for (const auto& [acc, per] : parts) var += (acc / per - est.mean) * (acc / per - est.mean);
  const double S = static_cast<double>(parts.size());
  est.std_error = std::sqrt(var / (S - 1.0) / S);
  return est;
}

/// v - m with m the Monte Carlo mean of v; m and its standard error are
/// recorded on the returned observable.
template <class System>
maps::Observable<typename System::State> center(const maps::Observable<typename System::State>& v, const System& sys,
                                                std::int64_t n_samples, std::uint64_t seed, std::int64_t burn_in = 10'000,
                                                int workers = 0) {
  const MeanEstimate m = mc_mean(sys, v, n_samples, seed, burn_in, 64, workers);
  maps::Observable<typename System::State> out;
  out.name = v.name + "-centered";
  out.evaluate = [f = v.evaluate, mean = m.mean](const typename System::State& x) { return f(x) - mean; };
  out.bound = v.bound + std::abs(m.mean);
  out.support = std::nullopt;
  out.mean_hint = 0.0;
  out.mean_stderr = m.std_error;
  out.subtracted_mean = m.mean;
  return out;
}

/// v - kappa u with kappa = mean(v) / mean(u), which has mean zero and keeps
/// the support of v when u is supported inside it.
template <class System>
maps::Observable<typename System::State> center_with(const maps::Observable<typename System::State>& v,
                                                     const maps::Observable<typename System::State>& u, const System& sys,
                                                     std::int64_t n_samples, std::uint64_t seed, std::int64_t burn_in = 10'000,
                                                     int workers = 0) {
  const MeanEstimate mv = mc_mean(sys, v, n_samples, seed, burn_in, 64, workers);
  const MeanEstimate mu = mc_mean(sys, u, n_samples, seed, burn_in, 64, workers);
  require(mu.mean != 0.0, "center_with: the compensating observable has zero mean");
  const double kappa = mv.mean / mu.mean;
  maps::Observable<typename System::State> out;
  out.name = v.name + "-compensated";
  out.evaluate = [f = v.evaluate, g = u.evaluate, kappa](const typename System::State& x) { return f(x) - kappa * g(x); };
  out.bound = v.bound + std::abs(kappa) * u.bound;
  out.support = v.support;
  out.mean_hint = 0.0;
  out.mean_stderr = mv.std_error;
  out.subtracted_mean = mv.mean;
  return out;
}

// ---------------------------------------------------------------------------
// Built-in observables.

/// Lipschitz-mollified indicator of the system's return set X.
maps::Observable<double> indicator_X_mollified(const maps::LsvSystem& sys, double width);
maps::Observable<maps::DyadicState> indicator_X_mollified(const maps::DoublingSystem& sys, double width);
maps::Observable<Eigen::Vector2d> indicator_X_mollified(const maps::RadialHvSystem& sys, double width);
maps::Observable<billiards::BilliardState> indicator_X_mollified(const billiards::BilliardSystem& sys, double width);

/// The system's scalar coordinate and cos(2 pi coordinate).
template <class System>
maps::Observable<typename System::State> coord_observable(const System& sys) {
  return {"coord", [&sys](const typename System::State& x) { return sys.coordinate(x); }, 1.0, std::nullopt, std::nullopt,
          std::nullopt, std::nullopt};
}

template <class System>
maps::Observable<typename System::State> cos_coord_observable(const System& sys) {
  return {"cos_coord", [&sys](const typename System::State& x) { return std::cos(2.0 * std::numbers::pi * sys.coordinate(x)); }, 1.0,
          std::nullopt, std::nullopt, std::nullopt, std::nullopt};
}

}  // namespace sharpdecay::correlator

#endif  // SHARPDECAY_CORRELATOR_HPP
