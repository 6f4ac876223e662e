#include "sharpdecay/dynmaps.hpp"

#include <cmath>
#include <numbers>

namespace sharpdecay::maps {

LsvSpec::LsvSpec(double g) : gamma(g) {
  require(g > 0.0 && g < 1.0, "LsvSpec: gamma must lie in (0,1)");
}

double lsv_step(const LsvSpec& spec, double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw InvalidArgument("lsv_step: x outside [0,1]: " + std::to_string(x));
  if (x < 0.5) return lsv_left(spec.gamma, x);
  return 2.0 * x - 1.0;
}

double lsv_left_inverse(double gamma, double t) {
  require(t >= 0.0 && t <= 1.0, "lsv_left_inverse: t outside [0,1]");
  if (t == 0.0) return 0.0;
  // g(x) = x + x (2x)^gamma - t is increasing and convex on [0,1/2], so
  // Newton from a point above the root decreases monotonically onto it.
  double lo = 0.0, hi = std::min(t, 0.5);
  double x = hi;
  for (int it = 0; it < 200; ++it) {
    const double p = std::pow(2.0 * x, gamma);
    const double g = x + x * p - t;
    if (g > 0.0) hi = x; else lo = x;
    const double dg = 1.0 + (1.0 + gamma) * p;
    double next = x - g / dg;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 4e-16 * x || hi - lo <= 4e-16 * hi) return next;
    x = next;
  }
  throw ConvergenceError("lsv_left_inverse: no convergence for t=" + std::to_string(t));
}

// ---------------------------------------------------------------------------

double solve_r_star(double gamma) {
  require(gamma > 0.0 && gamma < 2.0, "solve_r_star: gamma must lie in (0,2)");
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (mid * (1.0 + std::pow(mid, gamma)) < 1.0) lo = mid; else hi = mid;
  }
  const double r = 0.5 * (lo + hi);
  if (std::abs(r * (1.0 + std::pow(r, gamma)) - 1.0) > 1e-12) throw ConvergenceError("solve_r_star: residual too large");
  return r;
}

RadialHvSpec::RadialHvSpec(double g) : gamma(g), r_star(0.0) {
  require(g > 0.0 && g < 2.0, "RadialHvSpec: gamma must lie in (0,2)");
  r_star = solve_r_star(g);
}

double radial_hv_radius(const RadialHvSpec& spec, double r) {
  if (r <= spec.r_star) return std::min(1.0, r + r * std::pow(r, spec.gamma));
  const double rs = spec.r_star;
  return std::min(1.0, std::sqrt((r - rs) * (r + rs) / (1.0 - rs * rs)));
}

Eigen::Vector2d radial_hv_step(const RadialHvSpec& spec, const Eigen::Vector2d& p) {
  const double r = p.norm();
  if (!(r <= 1.0 + 1e-12)) throw InvalidArgument("radial_hv_step: point outside the closed unit disk");
  if (r == 0.0) return Eigen::Vector2d::Zero();
  if (r <= spec.r_star) {
    const double grow = std::pow(r, spec.gamma);
    Eigen::Vector2d out = p + p * grow;
    const double norm = out.norm();
    if (norm > 1.0) out /= norm;
    return out;
  }
  const double s = radial_hv_radius(spec, std::min(r, 1.0));
  const double ux = p.x() / r, uy = p.y() / r;
  return Eigen::Vector2d(s * (ux * ux - uy * uy), s * (2.0 * ux * uy));
}

// ---------------------------------------------------------------------------

double doubling_step(double x) {
  const double y = 2.0 * x;
  return y >= 1.0 ? y - 1.0 : y;
}

DyadicState dyadic_step(DyadicState s) {
  if (s.remaining == 0) {
    const Philox4x32Block ctr = {static_cast<std::uint32_t>(s.block), static_cast<std::uint32_t>(s.block >> 32),
                                 static_cast<std::uint32_t>(s.stream), static_cast<std::uint32_t>(s.stream >> 32)};
    const auto out = philox4x32_10(ctr, {static_cast<std::uint32_t>(s.seed), static_cast<std::uint32_t>(s.seed >> 32)});
    s.reservoir = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
    s.remaining = 64;
    ++s.block;
  }
  s.bits = (s.bits << 1) | (s.reservoir & 1u);
  s.reservoir >>= 1;
  --s.remaining;
  return s;
}

DyadicState dyadic_from_value(double x, std::uint64_t seed, std::uint64_t stream) {
  require(x >= 0.0 && x < 1.0, "dyadic_from_value: x outside [0,1)");
  DyadicState s;
  s.bits = static_cast<std::uint64_t>(std::ldexp(x, 64));
  s.seed = seed;
  s.stream = stream;
  return s;
}

DyadicState DoublingSystem::random_point(CounterRng& rng) const {
  DyadicState s;
  s.bits = rng.next_u64();
  s.seed = rng.seed();
  s.stream = stream_id(7, rng.next_u64() >> 16);
  return s;
}

DyadicState DoublingSystem::sample_X(CounterRng& rng) const {
  for (;;) {
    DyadicState s = random_point(rng);
    if (x_threshold == 0.5) s.bits |= (std::uint64_t{1} << 63);
    if (in_X(s)) return s;
  }
}

Eigen::Vector2d RadialHvSystem::random_point(CounterRng& rng) const {
  const double r = std::sqrt(rng.uniform_open());
  const double th = 2.0 * std::numbers::pi * rng.uniform();
  return {r * std::cos(th), r * std::sin(th)};
}

}  // namespace sharpdecay::maps
