#include <trt/geometry.hpp>

#include <trt/errors.hpp>
#include <trt/rng.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace trt::geometry {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kAngleSlack = 1e-12;
constexpr int kMaxFrameDim = 8;

// Row j of the closed-form frame matrix: j = 0 yields xi itself, j >= 1
// yields eta_j. Both follow one pattern once cos(phi_0) is read as 1.
Vec frame_row(const std::vector<double>& angles, int j) {
  const int n = static_cast<int>(angles.size()) + 1;
  Vec v = Vec::Zero(n);
  const double cj = (j == 0) ? 1.0 : std::cos(angles[j - 1]);
  for (int k = 0; k <= n - 2; ++k) {
    // Component x_{n-k} lives at storage index n-1-k.
    if (k < j - 1) continue;
    if (k == j - 1) {
      v[n - 1 - k] = -std::sin(angles[j - 1]);
      continue;
    }
    double prod = cj;
    for (int i = j + 1; i <= k; ++i) prod *= std::sin(angles[i - 1]);
    v[n - 1 - k] = prod * std::cos(angles[k]);
  }
  double prod = cj;
  for (int i = j + 1; i <= n - 1; ++i) prod *= std::sin(angles[i - 1]);
  v[0] = prod;
  return v;
}

double pair_margin3(const std::vector<Vec3>& dirs) {
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a + 1 < dirs.size(); ++a) {
    for (std::size_t b = a + 1; b < dirs.size(); ++b) {
      Eigen::Matrix<double, 3, 2> pair;
      pair.col(0) = dirs[a];
      pair.col(1) = dirs[b];
      Eigen::JacobiSVD<Eigen::Matrix<double, 3, 2>> svd(pair);
      margin = std::min(margin, svd.singularValues().minCoeff());
    }
  }
  return std::isfinite(margin) ? margin : 0.0;
}

}  // namespace

Frame frame_from_angles(const std::vector<double>& angles) {
  const int n = static_cast<int>(angles.size()) + 1;
  if (n < 2 || n > kMaxFrameDim) {
    throw InvalidInputError("frame_from_angles: dimension out of range");
  }
  for (int k = 0; k + 1 < n - 1; ++k) {
    if (angles[k] < -kAngleSlack || angles[k] > kPi + kAngleSlack) {
      throw InvalidInputError("frame_from_angles: polar angle outside [0, pi]");
    }
  }
  const double last = angles[n - 2];
  if (last < -kAngleSlack || last >= kTwoPi + kAngleSlack) {
    throw InvalidInputError("frame_from_angles: azimuth outside [0, 2pi)");
  }

  Frame f;
  f.n = n;
  f.angles = angles;
  f.xi = frame_row(angles, 0);
  f.eta.reserve(n - 1);
  for (int j = 1; j <= n - 1; ++j) f.eta.push_back(frame_row(angles, j));
  return f;
}

std::vector<double> angles_from_direction(const Vec& xi) {
  const int n = static_cast<int>(xi.size());
  if (n < 2 || n > kMaxFrameDim) {
    throw InvalidInputError("angles_from_direction: dimension out of range");
  }
  const double norm = xi.norm();
  if (norm < 1e-12) {
    throw InvalidInputError("angles_from_direction: zero vector");
  }
  const Vec u = xi / norm;

  std::vector<double> angles(n - 1, 0.0);
  for (int k = 1; k <= n - 2; ++k) {
    // phi_k = atan2(|(x_1..x_{n-k})|, x_{n-k+1}); both arguments vanish only
    // past a pole, where atan2(0, 0) = 0 picks the canonical branch.
    const double tail = u.head(n - k).norm();
    angles[k - 1] = std::atan2(tail, u[n - k]);
  }
  double az = std::atan2(u[0], u[1]);
  if (az < 0.0) az += kTwoPi;
  if (az >= kTwoPi) az = 0.0;
  angles[n - 2] = az;
  return angles;
}

Frame frame_of_direction(const Vec& xi) {
  return frame_from_angles(angles_from_direction(xi));
}

GreatCirclesCurve::GreatCirclesCurve(double radius) : radius_(radius) {
  if (!(radius > 0.0)) {
    throw InvalidInputError("great_circles_curve: radius must be positive");
  }
}

double GreatCirclesCurve::period(int piece) const {
  if (piece < 0 || piece >= 3) throw InvalidInputError("great_circles_curve: bad piece");
  return kTwoPi;
}

Vec3 GreatCirclesCurve::point(int piece, double lambda) const {
  const double c = radius_ * std::cos(lambda);
  const double s = radius_ * std::sin(lambda);
  switch (piece) {
    case 0: return Vec3(c, s, 0.0);
    case 1: return Vec3(0.0, c, s);
    case 2: return Vec3(s, 0.0, c);
    default: throw InvalidInputError("great_circles_curve: bad piece");
  }
}

Vec3 GreatCirclesCurve::velocity(int piece, double lambda) const {
  const double c = radius_ * std::cos(lambda);
  const double s = radius_ * std::sin(lambda);
  switch (piece) {
    case 0: return Vec3(-s, c, 0.0);
    case 1: return Vec3(0.0, -s, c);
    case 2: return Vec3(c, 0.0, -s);
    default: throw InvalidInputError("great_circles_curve: bad piece");
  }
}

std::unique_ptr<GreatCirclesCurve> great_circles_curve(double radius) {
  return std::make_unique<GreatCirclesCurve>(radius);
}

IntersectionSet plane_curve_intersections(const Curve& curve, const PlaneCoords& plane,
                                          double tol, const IntersectOptions& opt) {
  const Vec3 omega = plane.omega.normalized();
  IntersectionSet out;

  for (int piece = 0; piece < curve.piece_count(); ++piece) {
    const double T = curve.period(piece);
    const int N = opt.samples_per_piece;
    const double dl = T / N;
    auto h = [&](double lambda) { return omega.dot(curve.point(piece, lambda)) - plane.p; };

    std::vector<double> hs(N + 1);
    double max_abs = 0.0;
    for (int i = 0; i <= N; ++i) {
      hs[i] = h(i * dl);
      max_abs = std::max(max_abs, std::abs(hs[i]));
    }
    if (max_abs <= tol) {
      out.contained_pieces.push_back(piece);
      continue;
    }

    auto add_point = [&](double lambda, bool tangential) {
      CurvePoint cp{piece, lambda, curve.point(piece, lambda)};
      auto& list = tangential ? out.tangential : out.points;
      for (const auto& q : list) {
        if ((q.point - cp.point).norm() <= std::max(tol, 1e-12)) return;
      }
      list.push_back(cp);
    };

    for (int i = 0; i < N; ++i) {
      const double a = i * dl;
      const double b = (i + 1) * dl;
      if (hs[i] == 0.0) {
        const double h_prev = hs[(i + N - 1) % N];
        add_point(a, h_prev * hs[i + 1] > 0.0);
        continue;
      }
      if (hs[i] * hs[i + 1] < 0.0) {
        double lo = a, hi = b, hlo = hs[i];
        for (int s = 0; s < opt.refine_steps; ++s) {
          const double mid = 0.5 * (lo + hi);
          const double hm = h(mid);
          if (hm == 0.0) { lo = hi = mid; break; }
          if (hlo * hm < 0.0) { hi = mid; } else { lo = mid; hlo = hm; }
        }
        add_point(0.5 * (lo + hi), false);
      }
    }

    // Tangential contacts: interior minima of |h| with no sign change around
    // them, refined by ternary search and kept only when h actually reaches
    // the tolerance band.
    for (int i = 1; i < N; ++i) {
      const double ai = std::abs(hs[i]);
      if (ai > std::abs(hs[i - 1]) || ai > std::abs(hs[i + 1])) continue;
      if (hs[i - 1] * hs[i + 1] <= 0.0) continue;
      if (hs[i] == 0.0) continue;
      double lo = (i - 1) * dl, hi = (i + 1) * dl;
      for (int s = 0; s < opt.refine_steps; ++s) {
        const double m1 = lo + (hi - lo) / 3.0;
        const double m2 = hi - (hi - lo) / 3.0;
        if (std::abs(h(m1)) <= std::abs(h(m2))) { hi = m2; } else { lo = m1; }
      }
      const double lam = 0.5 * (lo + hi);
      if (std::abs(h(lam)) <= tol) {
        bool near_transversal = false;
        const Vec3 pt = curve.point(piece, lam);
        for (const auto& q : out.points) {
          if ((q.point - pt).norm() <= std::max(tol, dl)) { near_transversal = true; break; }
        }
        if (!near_transversal) add_point(lam, true);
      }
    }
  }

  auto by_piece_lambda = [](const CurvePoint& a, const CurvePoint& b) {
    return a.piece != b.piece ? a.piece < b.piece : a.lambda < b.lambda;
  };
  std::sort(out.points.begin(), out.points.end(), by_piece_lambda);
  std::sort(out.tangential.begin(), out.tangential.end(), by_piece_lambda);
  return out;
}

EncompassReport encompasses(const Curve& curve, const Ball& ball, int samples) {
  if (samples < 8) samples = 8;
  EncompassReport report;
  const std::vector<Vec3> dirs = fibonacci_sphere(64);

  for (int piece = 0; piece < curve.piece_count(); ++piece) {
    const double T = curve.period(piece);
    for (int i = 0; i < samples; ++i) {
      const Vec3 a = curve.point(piece, i * T / samples);
      const Vec3 rel = a - ball.center;
      if (rel.norm() <= ball.radius) {
        report.curve_hits_ball = true;
        report.has_witness = true;
        report.witness_point = a;
        return report;
      }
      for (const Vec3& xi : dirs) {
        // Both half-lines from a hit the ball exactly when the chord
        // parameter interval [t1, t2] straddles 0.
        const double b = xi.dot(rel);
        const double disc = b * b - (rel.squaredNorm() - ball.radius * ball.radius);
        if (disc < 0.0) continue;
        const double root = std::sqrt(disc);
        const double t1 = -b - root;
        const double t2 = -b + root;
        if (t1 <= 0.0 && t2 >= 0.0) {
          report.has_witness = true;
          report.witness_point = a;
          report.witness_dir = xi;
          return report;
        }
      }
    }
  }
  report.encompassed = true;
  return report;
}

std::string KTReport::to_text() const {
  std::ostringstream os;
  os.precision(12);
  os << "order = " << order << "\n";
  os << "planes_sampled = " << planes_sampled << "\n";
  os << "failures = " << failures.size() << "\n";
  os << "min_margin = " << min_margin << "\n";
  os << "max_jump = " << max_jump << "\n";
  os << "status = " << (pass() ? "pass" : "fail") << "\n";
  for (const auto& f : failures) {
    os << "failure: omega = (" << f.omega.x() << ", " << f.omega.y() << ", " << f.omega.z()
       << ") p = " << f.p << " reason = " << f.reason << "\n";
  }
  return os.str();
}

KTReport kirillov_tuy_report(const Curve& curve, const Ball& ball, int order,
                             int plane_samples, int point_samples, double margin_tol) {
  if (order < 1) throw InvalidInputError("kirillov_tuy_report: order must be >= 1");
  if (ball.radius <= 0.0) throw InvalidInputError("kirillov_tuy_report: ball radius must be positive");

  KTReport report;
  report.order = order;
  double min_margin = std::numeric_limits<double>::infinity();

  const int offsets = 8;
  const int dir_count = std::max(1, plane_samples / offsets);
  const std::vector<Vec3> normals = fibonacci_sphere(dir_count);
  Rng rng(0x4b54u);

  for (const Vec3& omega : normals) {
    const double p_center = omega.dot(ball.center);
    std::vector<Vec3> prev;
    bool have_prev = false;

    for (int t = 0; t < offsets; ++t) {
      // Offsets stay strictly inside the ball so every sampled plane meets it.
      const double frac = -0.9 + 1.8 * t / (offsets - 1);
      const double p = p_center + frac * ball.radius;
      ++report.planes_sampled;

      const IntersectionSet isect = plane_curve_intersections(curve, {omega, p});
      std::vector<Vec3> pts;
      pts.reserve(isect.points.size());
      for (const auto& cp : isect.points) pts.push_back(cp.point);

      if (have_prev && prev.size() == pts.size()) {
        for (std::size_t k = 0; k < pts.size(); ++k) {
          report.max_jump = std::max(report.max_jump, (pts[k] - prev[k]).norm());
        }
      }
      prev = pts;
      have_prev = true;

      if (static_cast<int>(pts.size()) < order + 1) {
        std::ostringstream reason;
        reason << "found " << pts.size() << " transversal intersection points, need " << order + 1;
        report.failures.push_back({omega, p, reason.str()});
        continue;
      }

      const Frame plane_frame = frame_of_direction(to_vec(omega));
      const Vec3 e1 = plane_frame.alpha();
      const Vec3 e2 = plane_frame.beta();
      const Vec3 disk_center = ball.center + frac * ball.radius * omega;
      const double disk_r = std::sqrt(std::max(0.0, 1.0 - frac * frac)) * ball.radius;

      for (int s = 0; s < point_samples; ++s) {
        const double rad = disk_r * std::sqrt(rng.uniform01());
        const double ang = kTwoPi * rng.uniform01();
        const Vec3 x = disk_center + rad * (std::cos(ang) * e1 + std::sin(ang) * e2);

        // Deterministic selection policy: walk the (piece, lambda)-sorted
        // points and keep a view direction only while the running set stays
        // pairwise independent at the margin tolerance.
        std::vector<Vec3> chosen;
        for (const Vec3& gamma : pts) {
          const Vec3 d = (x - gamma).normalized();
          bool ok = true;
          for (const Vec3& c : chosen) {
            if (pair_margin3({c, d}) <= margin_tol) { ok = false; break; }
          }
          if (ok) chosen.push_back(d);
          if (static_cast<int>(chosen.size()) == order + 1) break;
        }
        if (static_cast<int>(chosen.size()) < order + 1) {
          report.failures.push_back({omega, p, "no pairwise-independent view set at a sampled plane point"});
          break;
        }
        min_margin = std::min(min_margin, pair_margin3(chosen));
      }
    }
  }

  report.min_margin = std::isfinite(min_margin) ? min_margin : 0.0;
  return report;
}

bool great_circles_radius_ok(double curve_radius, double ball_radius) {
  return curve_radius > std::sqrt(3.0) * ball_radius;
}

std::vector<Vec3> fibonacci_sphere(int count) {
  if (count < 1) throw InvalidInputError("fibonacci_sphere: count must be positive");
  std::vector<Vec3> dirs;
  dirs.reserve(count);
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < count; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / count;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double th = golden * i;
    dirs.emplace_back(r * std::cos(th), r * std::sin(th), z);
  }
  return dirs;
}

}  // namespace trt::geometry
