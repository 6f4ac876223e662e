#include "sharpdecay/billiards.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace sharpdecay::billiards {

namespace {

constexpr double kPi = std::numbers::pi;

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

double wrap_2pi(double a) {
  a = std::fmod(a, 2.0 * kPi);
  return a < 0.0 ? a + 2.0 * kPi : a;
}

/// Angular offset of `q` along `arc` measured in its direction of travel, in [0, 2pi).
double arc_offset(const Arc& arc, const Vec2& q) {
  const double ang = std::atan2(q.y() - arc.center.y(), q.x() - arc.center.x());
  return wrap_2pi(arc.sign * (ang - arc.theta0));
}

Piece make_segment(Vec2 a, Vec2 b, Piece::Role role) {
  Piece p;
  p.shape = Segment{a, b};
  p.role = role;
  return p;
}

Piece make_arc(Vec2 c, double r, double theta0, double sweep, int sign, Piece::Role role) {
  Piece p;
  p.shape = Arc{c, r, theta0, sweep, sign};
  p.role = role;
  return p;
}

}  // namespace

double Piece::length() const {
  if (const auto* seg = std::get_if<Segment>(&shape)) return (seg->b - seg->a).norm();
  const auto& arc = std::get<Arc>(shape);
  return arc.radius * arc.sweep;
}

Vec2 Piece::position(double s) const {
  if (const auto* seg = std::get_if<Segment>(&shape)) return seg->a + (seg->b - seg->a).normalized() * s;
  const auto& arc = std::get<Arc>(shape);
  const double t = arc.theta0 + arc.sign * s / arc.radius;
  return arc.center + arc.radius * Vec2(std::cos(t), std::sin(t));
}

Vec2 Piece::tangent(double s) const {
  if (const auto* seg = std::get_if<Segment>(&shape)) return (seg->b - seg->a).normalized();
  const auto& arc = std::get<Arc>(shape);
  const double t = arc.theta0 + arc.sign * s / arc.radius;
  return arc.sign * Vec2(-std::sin(t), std::cos(t));
}

Table build_stadium(double ell, double radius) {
  require(radius > 0.0, "build_stadium: radius must be positive");
  require(ell >= 0.0, "build_stadium: ell must be nonnegative");
  Table t;
  t.kind = "stadium";
  t.ell = ell;
  const double h = 0.5 * ell;
  if (ell > 0.0) t.pieces.push_back(make_segment({-h, -radius}, {h, -radius}, Piece::Role::Wall));
  t.pieces.push_back(make_arc({h, 0.0}, radius, -0.5 * kPi, kPi, +1, Piece::Role::FocusingArc));
  if (ell > 0.0) t.pieces.push_back(make_segment({h, radius}, {-h, radius}, Piece::Role::Wall));
  t.pieces.push_back(make_arc({-h, 0.0}, radius, 0.5 * kPi, kPi, +1, Piece::Role::FocusingArc));
  for (auto& p : t.pieces) p.smooth_start = p.smooth_end = true;
  t.total_perimeter = 2.0 * ell + 2.0 * kPi * radius;
  t.area = 2.0 * radius * ell + kPi * radius * radius;
  t.diameter = ell + 2.0 * radius;
  return t;
}

Table build_semidispersing(double width, double height, const std::vector<Scatterer>& scatterers) {
  require(width > 0.0 && height > 0.0, "build_semidispersing: width and height must be positive");
  Table t;
  t.kind = "semidispersing";
  t.pieces.push_back(make_segment({0, 0}, {width, 0}, Piece::Role::Wall));
  t.pieces.push_back(make_segment({width, 0}, {width, height}, Piece::Role::Wall));
  t.pieces.push_back(make_segment({width, height}, {0, height}, Piece::Role::Wall));
  t.pieces.push_back(make_segment({0, height}, {0, 0}, Piece::Role::Wall));
  t.area = width * height;
  t.total_perimeter = 2.0 * (width + height);
  for (std::size_t i = 0; i < scatterers.size(); ++i) {
    const auto& sc = scatterers[i];
    require(sc.radius > 0.0, "build_semidispersing: scatterer " + std::to_string(i) + " has nonpositive radius");
    const bool inside = sc.center.x() - sc.radius > 0.0 && sc.center.x() + sc.radius < width &&
                        sc.center.y() - sc.radius > 0.0 && sc.center.y() + sc.radius < height;
    require(inside, "build_semidispersing: scatterer " + std::to_string(i) + " is not strictly inside the rectangle");
    for (std::size_t j = 0; j < i; ++j) {
      const auto& other = scatterers[j];
      require((sc.center - other.center).norm() > sc.radius + other.radius,
              "build_semidispersing: scatterers " + std::to_string(j) + " and " + std::to_string(i) + " overlap or touch");
    }
    Piece p = make_arc(sc.center, sc.radius, 0.0, 2.0 * kPi, -1, Piece::Role::Scatterer);
    p.smooth_start = p.smooth_end = true;
    t.pieces.push_back(p);
    t.area -= kPi * sc.radius * sc.radius;
    t.total_perimeter += 2.0 * kPi * sc.radius;
  }
  t.diameter = std::hypot(width, height);
  return t;
}

Vec2 outgoing_direction(const Table& table, const BoundaryPoint& bp) {
  const Piece& piece = table.pieces.at(static_cast<std::size_t>(bp.piece_id));
  return std::cos(bp.phi) * piece.normal(bp.s) + std::sin(bp.phi) * piece.tangent(bp.s);
}

Collision next_collision(const Table& table, const BoundaryPoint& bp) {
  require(bp.piece_id >= 0 && static_cast<std::size_t>(bp.piece_id) < table.pieces.size(), "next_collision: bad piece id");
  require(std::abs(bp.phi) <= 0.5 * kPi, "next_collision: |phi| exceeds pi/2");
  const Piece& from = table.pieces[static_cast<std::size_t>(bp.piece_id)];
  const Vec2 p = from.position(bp.s);
  const Vec2 d = outgoing_direction(table, bp);
  const double t_min = 1e-9 * table.diameter;

  double best_t = std::numeric_limits<double>::infinity();
  int best_piece = -1;
  double best_s = 0.0;
  for (std::size_t k = 0; k < table.pieces.size(); ++k) {
    const Piece& piece = table.pieces[k];
    if (const auto* seg = std::get_if<Segment>(&piece.shape)) {
      const Vec2 e = seg->b - seg->a;
      const double denom = cross(d, e);
      if (denom == 0.0) continue;
      const Vec2 ap = seg->a - p;
      const double t = cross(ap, e) / denom;
      const double u = cross(ap, d) / denom;
      if (t > t_min && t < best_t && u >= -1e-12 && u <= 1.0 + 1e-12) {
        best_t = t;
        best_piece = static_cast<int>(k);
        best_s = std::clamp(u, 0.0, 1.0) * e.norm();
      }
    } else {
      const Arc& arc = std::get<Arc>(piece.shape);
      const Vec2 pc = p - arc.center;
      const double B = d.dot(pc);
      const double C = pc.squaredNorm() - arc.radius * arc.radius;
      const double disc = B * B - C;
      if (disc < 0.0) continue;
      // Sign-aware roots of t^2 + 2 B t + C = 0.
      const double q = -(B + std::copysign(std::sqrt(disc), B));
      const double roots[2] = {q, q != 0.0 ? C / q : q};
      for (double t : roots) {
        if (!(t > t_min && t < best_t)) continue;
        const double off = arc_offset(arc, p + t * d);
        double s;
        if (arc.sweep >= 2.0 * kPi) {
          s = off * arc.radius;
        } else if (off <= arc.sweep + 1e-12) {
          s = std::min(off, arc.sweep) * arc.radius;
        } else if (off >= 2.0 * kPi - 1e-12) {
          s = 0.0;
        } else {
          continue;
        }
        best_t = t;
        best_piece = static_cast<int>(k);
        best_s = s;
      }
    }
  }
  if (best_piece < 0) throw GeometryError("next_collision: ray from piece " + std::to_string(bp.piece_id) + " escapes the table");

  const Piece& hit = table.pieces[static_cast<std::size_t>(best_piece)];
  const double len = hit.length();
  const double corner_tol = 1e-9 * table.diameter;
  if ((!hit.smooth_start && best_s < corner_tol) || (!hit.smooth_end && len - best_s < corner_tol))
    throw CornerGrazing("next_collision: corner hit on piece " + std::to_string(best_piece));
  const Vec2 n = hit.normal(best_s);
  const Vec2 tan = hit.tangent(best_s);
  const double cos_in = -d.dot(n);
  if (cos_in <= 1e-9) throw CornerGrazing("next_collision: tangential hit on piece " + std::to_string(best_piece));
  Collision c;
  c.point = {best_piece, best_s, std::atan2(d.dot(tan), cos_in)};
  c.tau = best_t;
  return c;
}

BoundaryPoint liouville_point(const Table& table, const std::vector<int>& pieces, CounterRng& rng) {
  double total = 0.0;
  for (int id : pieces) total += table.pieces.at(static_cast<std::size_t>(id)).length();
  double u = rng.uniform() * total;
  int chosen = pieces.back();
  for (int id : pieces) {
    const double len = table.pieces[static_cast<std::size_t>(id)].length();
    if (u < len) {
      chosen = id;
      break;
    }
    u -= len;
  }
  const double len = table.pieces[static_cast<std::size_t>(chosen)].length();
  const double phi = std::asin(2.0 * rng.uniform() - 1.0);
  return {chosen, std::clamp(u, 0.0, len), phi};
}

std::vector<BoundaryPoint> liouville_sample(const Table& table, const std::optional<std::set<int>>& piece_filter,
                                            std::uint64_t seed, std::size_t n) {
  std::vector<int> ids;
  if (piece_filter) {
    require(!piece_filter->empty(), "liouville_sample: empty piece filter");
    for (int id : *piece_filter) {
      require(id >= 0 && static_cast<std::size_t>(id) < table.pieces.size(), "liouville_sample: unknown piece id");
      ids.push_back(id);
    }
  } else {
    for (std::size_t k = 0; k < table.pieces.size(); ++k) ids.push_back(static_cast<int>(k));
  }
  CounterRng rng(seed, stream_id(2, 0));
  std::vector<BoundaryPoint> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(liouville_point(table, ids, rng));
  return out;
}

double stadium_constant(double ell) {
  require(ell > 0.0, "stadium_constant: ell must be positive");
  const double l3 = 3.0 * std::log(3.0);
  return (4.0 + l3) / (4.0 - l3) * ell * ell / (4.0 * (kPi + ell));
}

double mean_free_path(const Table& table) { return kPi * table.area / table.total_perimeter; }

// ---------------------------------------------------------------------------

BilliardSystem::BilliardSystem(Table t, ReturnSet rs) : table(std::move(t)), return_set(rs) {
  for (std::size_t k = 0; k < table.pieces.size(); ++k) {
    all_pieces.push_back(static_cast<int>(k));
    const auto role = table.pieces[k].role;
    if ((rs == ReturnSet::FirstArcCollisions && role == Piece::Role::FocusingArc) ||
        (rs == ReturnSet::ScattererCollisions && role == Piece::Role::Scatterer))
      x_pieces.push_back(static_cast<int>(k));
  }
  require(!x_pieces.empty(), "BilliardSystem: return set is empty for this table");
}

BilliardState BilliardSystem::step(const BilliardState& x) const {
  const Collision c = next_collision(table, x.bp);
  return {c.point, x.bp.piece_id};
}

int BilliardSystem::preceding_piece(const BoundaryPoint& bp) const { return next_collision(table, reversed(bp)).point.piece_id; }

BilliardState BilliardSystem::random_point(CounterRng& rng) const {
  for (;;) {
    const BoundaryPoint bp = liouville_point(table, all_pieces, rng);
    try {
      return with_history(bp);
    } catch (const Resample&) {
    }
  }
}

BilliardState BilliardSystem::sample_X(CounterRng& rng) const {
  for (;;) {
    const BoundaryPoint bp = liouville_point(table, x_pieces, rng);
    try {
      BilliardState s = with_history(bp);
      if (in_X(s)) return s;
    } catch (const Resample&) {
    }
  }
}

bool BilliardSystem::in_X(const BilliardState& x) const {
  const auto role = table.pieces[static_cast<std::size_t>(x.bp.piece_id)].role;
  if (return_set == ReturnSet::ScattererCollisions) return role == Piece::Role::Scatterer;
  return role == Piece::Role::FocusingArc && x.prev_piece != x.bp.piece_id;
}

double BilliardSystem::mollified_indicator(const BilliardState& x, double width) const {
  const Piece& piece = table.pieces[static_cast<std::size_t>(x.bp.piece_id)];
  if (return_set == ReturnSet::ScattererCollisions) return piece.role == Piece::Role::Scatterer ? 1.0 : 0.0;
  if (piece.role != Piece::Role::FocusingArc) return 0.0;
  const Arc& arc = std::get<Arc>(piece.shape);
  const Vec2 p = piece.position(x.bp.s);
  const Vec2 back = outgoing_direction(table, reversed(x.bp));
  const double t = -2.0 * (p - arc.center).dot(back);
  const double off = arc_offset(arc, p + t * back);
  if (off <= arc.sweep) return 0.0;
  const double outside = std::min(off - arc.sweep, 2.0 * kPi - off) * arc.radius;
  return width <= 0.0 ? 1.0 : std::min(1.0, outside / width);
}

double BilliardSystem::analytic_measure_X() const {
  require(table.kind == "stadium" && return_set == ReturnSet::FirstArcCollisions, "analytic_measure_X: stadium only");
  const double r = std::get<Arc>(table.pieces[static_cast<std::size_t>(x_pieces.front())].shape).radius;
  return 2.0 * r / (kPi * r + table.ell);
}

}  // namespace sharpdecay::billiards
