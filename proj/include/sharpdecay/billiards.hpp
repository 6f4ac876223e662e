// Exact-geometry planar billiard collision maps.
//
// Boundary pieces are oriented so that the billiard domain lies to the left
// of the direction of increasing arclength; the inward normal is therefore
// the left normal of the unit tangent. A phase point is (piece, s, phi) with
// phi in [-pi/2, pi/2] the outgoing angle from the inward normal, positive
// towards the tangent. Liouville measure is cos(phi) ds dphi / (2 |boundary|).
#ifndef SHARPDECAY_BILLIARDS_HPP
#define SHARPDECAY_BILLIARDS_HPP

#include <Eigen/Dense>

#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "sharpdecay/core.hpp"

namespace sharpdecay::billiards {

using Vec2 = Eigen::Vector2d;

struct Segment {
  Vec2 a, b;
};

/// Circular arc traversed from angle `theta0` with orientation `sign`:
/// position(s) = center + radius * (cos t, sin t), t = theta0 + sign * s / radius.
/// sign = +1 (counterclockwise) bounds the domain from outside and is
/// focusing; sign = -1 (clockwise) is a dispersing scatterer wall.
struct Arc {
  Vec2 center;
  double radius;
  double theta0;
  double sweep;  // angular extent, > 0
  int sign;
};

struct Piece {
  std::variant<Segment, Arc> shape;
  enum class Role { Wall, FocusingArc, Scatterer } role = Role::Wall;
  /// Whether the junctions at s = 0 and s = length with the neighbouring
  /// pieces of the same loop are smooth; false marks a genuine corner.
  bool smooth_start = false;
  bool smooth_end = false;

  double length() const;
  Vec2 position(double s) const;
  Vec2 tangent(double s) const;
  Vec2 normal(double s) const { const Vec2 t = tangent(s); return {-t.y(), t.x()}; }
  bool is_arc() const { return std::holds_alternative<Arc>(shape); }
};

struct Table {
  std::vector<Piece> pieces;
  double total_perimeter = 0.0;
  double area = 0.0;
  double diameter = 0.0;
  std::string kind;
  double ell = 0.0;  // stadium straight-side length (0 for other kinds)
};

struct BoundaryPoint {
  int piece_id = 0;
  double s = 0.0;
  double phi = 0.0;
};

struct Collision {
  BoundaryPoint point;
  double tau = 0.0;
};

/// Stadium: two segments of length ell joined by two semicircles of the
/// given radius. ell = 0 gives a circle (two semicircular pieces).
Table build_stadium(double ell, double radius);

struct Scatterer {
  Vec2 center;
  double radius;
};

/// Rectangle [0,width] x [0,height] minus disjoint interior disks.
Table build_semidispersing(double width, double height, const std::vector<Scatterer>& scatterers);

/// Free flight from `bp` to the next boundary collision and specular
/// reflection there. Throws CornerGrazing (a Resample) for corner hits and
/// tangential hits; throws GeometryError if no intersection exists.
Collision next_collision(const Table& table, const BoundaryPoint& bp);

class CornerGrazing : public Resample {
 public:
  using Resample::Resample;
};

Vec2 outgoing_direction(const Table& table, const BoundaryPoint& bp);

/// Liouville samples restricted to `piece_filter` (all pieces when empty
/// optional): s uniform on the filtered arclength, phi = arcsin(2u - 1).
BoundaryPoint liouville_point(const Table& table, const std::vector<int>& pieces, CounterRng& rng);
std::vector<BoundaryPoint> liouville_sample(const Table& table, const std::optional<std::set<int>>& piece_filter,
                                            std::uint64_t seed, std::size_t n);

/// (4 + 3 ln 3)/(4 - 3 ln 3) * ell^2 / (4 (pi + ell)); semicircle radius 1.
double stadium_constant(double ell);

/// pi * area / perimeter.
double mean_free_path(const Table& table);

/// Time reversal of a phase point: same boundary point, phi -> -phi.
inline BoundaryPoint reversed(const BoundaryPoint& bp) { return {bp.piece_id, bp.s, -bp.phi}; }

// ---------------------------------------------------------------------------
// Billiard collision map as an orbit system.
//
// The state carries the piece of the preceding collision so that membership
// in the stadium return set ("first collision with a semicircle") is a pure
// function of the state.

struct BilliardState {
  BoundaryPoint bp;
  int prev_piece = -1;
};

enum class ReturnSet {
  FirstArcCollisions,  // arc collisions whose preceding collision is on another piece
  ScattererCollisions,  // all collisions with scatterers
};

struct BilliardSystem {
  using State = BilliardState;
  static constexpr bool exact_mu_sampling = true;

  Table table;
  ReturnSet return_set;
  std::vector<int> all_pieces;
  std::vector<int> x_pieces;  // pieces on which X lives

  BilliardSystem(Table t, ReturnSet rs);

  State step(const State& x) const;
  /// Exact Liouville sample (mu).
  State random_point(CounterRng& rng) const;
  /// Exact mu_X sample: Liouville on the X pieces, rejection on the
  /// preceding-piece condition.
  State sample_X(CounterRng& rng) const;
  bool in_X(const State& x) const;
  bool is_degenerate(const State&) const { return false; }
  double coordinate(const State& x) const { return x.bp.phi; }

  /// Piece of the preceding collision, by time reversal.
  int preceding_piece(const BoundaryPoint& bp) const;
  State with_history(const BoundaryPoint& bp) const { return {bp, preceding_piece(bp)}; }

  /// Lipschitz-mollified indicator of X: for the stadium, ramps with the
  /// arclength distance between the virtual preceding point on the full
  /// circle and the semicircle (0 when the preceding collision is on the
  /// same semicircle); for scatterer collisions X is a union of components
  /// of phase space and the indicator is already smooth.
  double mollified_indicator(const State& x, double width) const;

  /// mu(X) for the stadium return set, 2/(pi + ell) at radius 1.
  double analytic_measure_X() const;
};

}  // namespace sharpdecay::billiards

#endif  // SHARPDECAY_BILLIARDS_HPP
