// Concrete nonuniformly expanding maps: the Liverani-Saussol-Vaienti
// intermittent map, a radial two-dimensional map with a neutral fixed point
// of the form x(1+|x|^gamma), and the doubling map as a uniformly expanding
// fixture. Each map also comes wrapped as an orbit "system" (see
// system.hpp) with a default return set X.
#ifndef SHARPDECAY_DYNMAPS_HPP
#define SHARPDECAY_DYNMAPS_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sharpdecay/core.hpp"

namespace sharpdecay::maps {

// ---------------------------------------------------------------------------
// LSV map f(x) = x(1 + 2^gamma x^gamma) on [0,1/2), 2x-1 on [1/2,1].
// beta = 1/gamma.

struct LsvSpec {
  double gamma;
  explicit LsvSpec(double g);
  double beta() const { return 1.0 / gamma; }
};

double lsv_step(const LsvSpec& spec, double x);

/// Left branch only: x + x (2x)^gamma.
inline double lsv_left(double gamma, double x) { return x + x * std::pow(2.0 * x, gamma); }

/// Inverse of the left branch on [0,1]: the unique x in [0,1/2] with
/// lsv_left(x) = t. Safeguarded Newton; throws ConvergenceError.
double lsv_left_inverse(double gamma, double t);

// ---------------------------------------------------------------------------
// Radial map on the closed unit disk with neutral fixed point at 0.
//
// Inner branch (r <= r_star): p -> p (1 + r^gamma), angle preserved.
// Outer branch (r > r_star): radius S(r) = sqrt((r^2 - r_star^2)/(1 - r_star^2))
// and angle doubled. The outer branch has constant area Jacobian
// 2/(1 - r_star^2), so preimages of small disks around 0 have area ~ eps^2
// and the return-time tail to the annulus is n^{-2/gamma}.

struct RadialHvSpec {
  double gamma;
  double r_star;
  explicit RadialHvSpec(double g);
  double beta() const { return 2.0 / gamma; }
};

/// Solves r (1 + r^gamma) = 1 for r in (0,1).
double solve_r_star(double gamma);

Eigen::Vector2d radial_hv_step(const RadialHvSpec& spec, const Eigen::Vector2d& p);

/// Radius map underlying radial_hv_step.
double radial_hv_radius(const RadialHvSpec& spec, double r);

// ---------------------------------------------------------------------------

/// 2x mod 1.
double doubling_step(double x);

/// Doubling-map orbit state held as 64 binary digits. Each step shifts out
/// the leading digit and appends a fresh digit from a counter-based stream,
/// which is the exact law of the orbit of a Lebesgue-random point. (In
/// double precision 2x mod 1 reaches 0 after at most 53 steps.)
struct DyadicState {
  std::uint64_t bits = 0;
  std::uint64_t reservoir = 0;
  std::uint32_t remaining = 0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::uint64_t block = 0;
  double value() const { return static_cast<double>(bits >> 11) * 0x1.0p-53; }
};

DyadicState dyadic_step(DyadicState s);
DyadicState dyadic_from_value(double x, std::uint64_t seed, std::uint64_t stream);

// ---------------------------------------------------------------------------
// Orbit systems. Each provides State, step, random_point (a Lebesgue-random
// start, not yet mu-distributed), in_X, and is_degenerate (exact fixed
// point: the orbit is restarted).

struct LsvSystem {
  using State = double;
  LsvSpec spec;
  double x_threshold = 0.5;  // X = [x_threshold, 1]
  static constexpr bool exact_mu_sampling = false;

  State step(const State& x) const { return lsv_step(spec, x); }
  State random_point(CounterRng& rng) const { return rng.uniform_open(); }
  bool in_X(const State& x) const { return x >= x_threshold; }
  bool is_degenerate(const State& x) const { return x == 0.0; }
  double coordinate(const State& x) const { return x; }
};

struct DoublingSystem {
  using State = DyadicState;
  double x_threshold = 0.5;  // X = [x_threshold, 1)
  static constexpr bool exact_mu_sampling = true;

  State step(const State& s) const { return dyadic_step(s); }
  State random_point(CounterRng& rng) const;
  bool in_X(const State& s) const { return s.value() >= x_threshold; }
  bool is_degenerate(const State&) const { return false; }
  double coordinate(const State& s) const { return s.value(); }
  /// Exact mu_X sample: Lebesgue on X.
  State sample_X(CounterRng& rng) const;
};

struct RadialHvSystem {
  using State = Eigen::Vector2d;
  RadialHvSpec spec;
  static constexpr bool exact_mu_sampling = false;

  State step(const State& p) const { return radial_hv_step(spec, p); }
  State random_point(CounterRng& rng) const;
  /// X = annulus r_star < |p| <= 1 (domain of the expanding branch).
  bool in_X(const State& p) const { return p.norm() > spec.r_star; }
  bool is_degenerate(const State& p) const { return p.x() == 0.0 && p.y() == 0.0; }
  double coordinate(const State& p) const { return p.norm(); }
};

// ---------------------------------------------------------------------------
// Observables.

template <class State>
struct Observable {
  std::string name;
  std::function<double(const State&)> evaluate;
  /// Declared sup bound (checked by sampling in tests).
  double bound = 1.0;
  std::optional<std::function<bool(const State&)>> support;
  std::optional<double> mean_hint;
  std::optional<double> mean_stderr;
  /// Set by centering: the Monte Carlo mean that was subtracted.
  std::optional<double> subtracted_mean;

  double operator()(const State& x) const { return evaluate(x); }
};

template <class State>
Observable<State> constant_observable(double c) {
  return {"const", [c](const State&) { return c; }, std::abs(c), std::nullopt, c, 0.0, std::nullopt};
}

/// Lipschitz ramp that is 0 at the boundary of [lo, hi] and 1 at distance
/// >= width inside it.
inline double ramp_inside(double x, double lo, double hi, double width) {
  if (x <= lo || x >= hi) return 0.0;
  if (width <= 0.0) return 1.0;
  return std::min({1.0, (x - lo) / width, (hi - x) / width});
}

/// Mollified indicator of X = [threshold, 1] for interval maps: ramps up from
/// the left endpoint of X only (X is closed at 1).
inline double ramp_from(double x, double lo, double width) {
  if (x <= lo) return 0.0;
  if (width <= 0.0) return 1.0;
  return std::min(1.0, (x - lo) / width);
}

// ---------------------------------------------------------------------------

/// Orbit statistics reported by samplers.
struct OrbitReport {
  std::uint64_t restarts = 0;
};

/// Runs `burn_in` steps from a seeded start, then emits `n` states to `emit`.
/// Exact fixed points restart the orbit from a jittered point (counted).
template <class System, class Emit>
OrbitReport run_orbit(const System& sys, CounterRng& rng, std::int64_t burn_in, std::int64_t n, Emit&& emit,
                      std::optional<typename System::State> x0 = std::nullopt) {
  OrbitReport report;
  typename System::State x = x0 ? *x0 : sys.random_point(rng);
  auto restart = [&] {
    ++report.restarts;
    x = sys.random_point(rng);
  };
  for (std::int64_t t = 0; t < burn_in; ++t) {
    try {
      x = sys.step(x);
    } catch (const Resample&) {
      restart();
    }
    if (sys.is_degenerate(x)) restart();
  }
  for (std::int64_t t = 0; t < n; ++t) {
    emit(x);
    try {
      x = sys.step(x);
    } catch (const Resample&) {
      restart();
    }
    if (sys.is_degenerate(x)) restart();
  }
  return report;
}

/// Deterministic orbit of the absolutely continuous invariant measure:
/// returns n states after burn_in, reproducible from (seed).
template <class System>
std::vector<typename System::State> acim_orbit(const System& sys, std::optional<typename System::State> x0, std::int64_t burn_in,
                                               std::int64_t n, std::uint64_t seed, OrbitReport* report = nullptr) {
  require(burn_in >= 0 && n >= 0, "acim_orbit: burn_in and n must be nonnegative");
  CounterRng rng(seed, stream_id(1, 0));
  std::vector<typename System::State> out;
  out.reserve(static_cast<std::size_t>(n));
  const auto r = run_orbit(sys, rng, burn_in, n, [&](const auto& x) { out.push_back(x); }, x0);
  if (report) *report = r;
  return out;
}

}  // namespace sharpdecay::maps

#endif  // SHARPDECAY_DYNMAPS_HPP
