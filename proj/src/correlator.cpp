#include "sharpdecay/correlator.hpp"

#include <iomanip>

namespace sharpdecay::correlator {

Scheme parse_scheme(const std::string& name) {
  if (name == "long_orbit") return Scheme::LongOrbit;
  if (name == "ensemble") return Scheme::Ensemble;
  throw InvalidArgument("unknown scheme '" + name + "' (expected long_orbit or ensemble)");
}

std::string scheme_name(Scheme s) { return s == Scheme::LongOrbit ? "long_orbit" : "ensemble"; }

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

}  // namespace

std::string describe_state(double x) { return "x=" + fmt(x); }

std::string describe_state(const Eigen::Vector2d& p) { return "(" + fmt(p.x()) + ", " + fmt(p.y()) + ")"; }

std::string describe_state(const maps::DyadicState& s) { return "x=" + fmt(s.value()); }

std::string describe_state(const billiards::BilliardState& s) {
  return "piece=" + std::to_string(s.bp.piece_id) + " s=" + fmt(s.bp.s) + " phi=" + fmt(s.bp.phi);
}

maps::Observable<double> indicator_X_mollified(const maps::LsvSystem& sys, double width) {
  const double lo = sys.x_threshold;
  return {"indicator_X_mollified", [lo, width](const double& x) { return maps::ramp_from(x, lo, width); }, 1.0,
          [lo](const double& x) { return x >= lo; }, std::nullopt, std::nullopt, std::nullopt};
}

maps::Observable<maps::DyadicState> indicator_X_mollified(const maps::DoublingSystem& sys, double width) {
  const double lo = sys.x_threshold;
  return {"indicator_X_mollified", [lo, width](const maps::DyadicState& s) { return maps::ramp_from(s.value(), lo, width); }, 1.0,
          [lo](const maps::DyadicState& s) { return s.value() >= lo; }, std::nullopt, std::nullopt, std::nullopt};
}

maps::Observable<Eigen::Vector2d> indicator_X_mollified(const maps::RadialHvSystem& sys, double width) {
  const double lo = sys.spec.r_star;
  return {"indicator_X_mollified", [lo, width](const Eigen::Vector2d& p) { return maps::ramp_from(p.norm(), lo, width); }, 1.0,
          [lo](const Eigen::Vector2d& p) { return p.norm() > lo; }, std::nullopt, std::nullopt, std::nullopt};
}

maps::Observable<billiards::BilliardState> indicator_X_mollified(const billiards::BilliardSystem& sys, double width) {
  return {"indicator_X_mollified", [&sys, width](const billiards::BilliardState& x) { return sys.mollified_indicator(x, width); }, 1.0,
          [&sys](const billiards::BilliardState& x) { return sys.in_X(x); }, std::nullopt, std::nullopt, std::nullopt};
}

}  // namespace sharpdecay::correlator
