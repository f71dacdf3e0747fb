#pragma once

#include <trt/linalg.hpp>

#include <memory>
#include <string>
#include <vector>

namespace trt::geometry {

/// Orthonormal frame attached to a unit direction, built in closed form from
/// hyperspherical angles. For n = 3 the tangent fields eta[0], eta[1] are the
/// alpha and beta directions of the transform channels.
struct Frame {
  int n = 0;
  std::vector<double> angles;
  Vec xi;
  std::vector<Vec> eta;

  Vec3 xi3() const { return to_vec3(xi); }
  Vec3 alpha() const { return to_vec3(eta.at(0)); }
  Vec3 beta() const { return to_vec3(eta.at(1)); }
};

/// Frame from angles phi_1..phi_{n-1}; n = angles.size() + 1. The polar
/// angles phi_1..phi_{n-2} must lie in [0, pi], the last in [0, 2pi).
Frame frame_from_angles(const std::vector<double>& angles);

/// Hyperspherical angles of a unit vector. Angles left undefined by a
/// coordinate pole are returned as 0 (the canonical branch), which keeps the
/// map total and deterministic.
std::vector<double> angles_from_direction(const Vec& xi);

/// frame_from_angles(angles_from_direction(xi)) with xi normalized first.
Frame frame_of_direction(const Vec& xi);

struct Ball {
  Vec3 center = Vec3::Zero();
  double radius = 0.0;
};

/// Oriented plane {x : <omega, x> = p} with unit normal.
struct PlaneCoords {
  Vec3 omega = Vec3::UnitZ();
  double p = 0.0;
};

/// Piecewise-C1 parametric curve in R^3. Each piece has its own parameter
/// interval [0, period(piece)); pieces of the shipped curves are periodic.
class Curve {
 public:
  virtual ~Curve() = default;
  virtual int piece_count() const = 0;
  virtual double period(int piece) const = 0;
  virtual Vec3 point(int piece, double lambda) const = 0;
  virtual Vec3 velocity(int piece, double lambda) const = 0;
};

/// Union of the three coordinate-plane great circles of radius R centered at
/// the origin: piece 0 in xy, piece 1 in yz, piece 2 in zx.
class GreatCirclesCurve final : public Curve {
 public:
  explicit GreatCirclesCurve(double radius);
  int piece_count() const override { return 3; }
  double period(int) const override;
  Vec3 point(int piece, double lambda) const override;
  Vec3 velocity(int piece, double lambda) const override;
  double radius() const { return radius_; }

 private:
  double radius_;
};

/// Factory with the R > 0 validity check.
std::unique_ptr<GreatCirclesCurve> great_circles_curve(double radius);

/// One located intersection of a plane with the curve.
struct CurvePoint {
  int piece = 0;
  double lambda = 0.0;
  Vec3 point = Vec3::Zero();
};

/// Result of plane_curve_intersections. Transversal crossings are sorted by
/// (piece, lambda) and spatially deduplicated; tangential contacts (even
/// multiplicity at the sampling resolution) are listed separately; pieces
/// lying entirely inside the plane are reported by index.
struct IntersectionSet {
  std::vector<CurvePoint> points;
  std::vector<CurvePoint> tangential;
  std::vector<int> contained_pieces;
};

struct IntersectOptions {
  int samples_per_piece = 2048;
  int refine_steps = 60;
};

/// All solutions of <omega, gamma(lambda)> = p per piece, found by bracketing
/// on a uniform lambda grid and bisection refinement. tol bounds both the
/// residual |<omega, gamma> - p| and the spatial dedup distance.
IntersectionSet plane_curve_intersections(const Curve& curve, const PlaneCoords& plane,
                                          double tol = 1e-9,
                                          const IntersectOptions& opt = {});

/// Verdict of the encompassing check with the failing sample when one exists.
struct EncompassReport {
  bool encompassed = false;
  bool curve_hits_ball = false;
  bool has_witness = false;
  Vec3 witness_point = Vec3::Zero();
  Vec3 witness_dir = Vec3::Zero();
};

/// Sampled certificate that the curve avoids the ball and that no line
/// through a curve point meets the ball on both of its half-lines. samples
/// counts curve points per piece; directions come from a fixed deterministic
/// sphere covering.
EncompassReport encompasses(const Curve& curve, const Ball& ball, int samples = 512);

struct KTFailure {
  Vec3 omega = Vec3::Zero();
  double p = 0.0;
  std::string reason;
};

/// Sampled certificate of the order-m Kirillov-Tuy condition (m = 1 is the
/// modified condition). Failures list every sampled plane that lacks m+1
/// usable intersection points or a generic direction set at some sampled
/// plane point. max_jump is the continuity proxy: the largest movement of a
/// matched intersection point between adjacent offsets of the same normal.
struct KTReport {
  int order = 0;
  int planes_sampled = 0;
  std::vector<KTFailure> failures;
  double min_margin = 0.0;
  double max_jump = 0.0;

  bool pass() const { return planes_sampled > 0 && failures.empty(); }
  std::string to_text() const;
};

KTReport kirillov_tuy_report(const Curve& curve, const Ball& ball, int order,
                             int plane_samples = 256, int point_samples = 8,
                             double margin_tol = 1e-6);

/// Hypothesis guard for the three-circles geometry: R > sqrt(3) * r keeps the
/// curve clear of every line pair through the ball.
bool great_circles_radius_ok(double curve_radius, double ball_radius);

/// Deterministic quasi-uniform covering of the unit sphere (spiral lattice).
std::vector<Vec3> fibonacci_sphere(int count);

}  // namespace trt::geometry
