// Acceptance gate: ten desk-scale criteria with pinned tolerances, one
// verdict line each, nonzero exit when any fail. Pass --full to include the
// slow order-2 end-to-end arm.

#include <trt/errors.hpp>
#include <trt/geometry.hpp>
#include <trt/harness.hpp>
#include <trt/recon.hpp>
#include <trt/rng.hpp>
#include <trt/symtensor.hpp>
#include <trt/xforms.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <functional>
#include <iostream>
#include <limits>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

using namespace trt;

namespace {

constexpr double kPi = std::numbers::pi;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string sci(double v) {
  std::ostringstream out;
  out.precision(3);
  out << v;
  return out.str();
}

// ---------------------------------------------------------------------------
// 1. Polarization identity: polarize against the direct symmetric-product
//    contraction, tensors to order 4 and the scalar surrogate to order 6.
Verdict criterion_polarization() {
  Rng rng(101);
  double worst_tensor = 0.0;
  for (int m = 1; m <= 4; ++m) {
    for (int trial = 0; trial < 100; ++trial) {
      symtensor::SymTensor f(m, 3);
      for (double& c : f.c) c = rng.normal();
      std::vector<Vec> thetas;
      for (int j = 0; j < m; ++j) thetas.push_back(rng.unit_vector(3));
      const double direct = symtensor::contract(f, symtensor::sym_product(thetas));
      const double via = symtensor::polarize(f, thetas);
      worst_tensor = std::max(worst_tensor, std::abs(via - direct) / (1.0 + std::abs(direct)));
    }
  }
  double worst_scalar = 0.0;
  for (int m = 1; m <= 6; ++m) {
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> values;
      double product = 1.0;
      for (int j = 0; j < m; ++j) {
        values.push_back(rng.uniform(-2.0, 2.0));
        product *= values.back();
      }
      const double via = symtensor::polarize_scalar(values);
      worst_scalar = std::max(worst_scalar, std::abs(via - product) / (1.0 + std::abs(product)));
    }
  }
  const double tol = 1e-9;
  Verdict v;
  v.pass = worst_tensor <= tol && worst_scalar <= tol;
  v.detail = "tensor worst " + sci(worst_tensor) + ", scalar worst " + sci(worst_scalar) +
             ", tol " + sci(tol);
  return v;
}

// ---------------------------------------------------------------------------
// 2. Frame correctness: orthonormality and angle round-trip away from the
//    poles for n in {3, 4, 5}.
Verdict criterion_frames() {
  Rng rng(102);
  double worst_gram = 0.0;
  double worst_round = 0.0;
  for (int n = 3; n <= 5; ++n) {
    for (int trial = 0; trial < 10000; ++trial) {
      std::vector<double> angles(n - 1);
      for (int a = 0; a + 1 < n - 1; ++a) angles[a] = rng.uniform(0.05, kPi - 0.05);
      angles[n - 2] = rng.uniform(0.0, 2.0 * kPi);

      const geometry::Frame frame = geometry::frame_from_angles(angles);
      std::vector<Vec> basis{frame.xi};
      basis.insert(basis.end(), frame.eta.begin(), frame.eta.end());
      for (std::size_t i = 0; i < basis.size(); ++i) {
        for (std::size_t j = 0; j < basis.size(); ++j) {
          const double want = i == j ? 1.0 : 0.0;
          worst_gram = std::max(worst_gram, std::abs(basis[i].dot(basis[j]) - want));
        }
      }

      const std::vector<double> back = geometry::angles_from_direction(frame.xi);
      for (int a = 0; a < n - 1; ++a) {
        double dev = std::abs(back[a] - angles[a]);
        if (a == n - 2) dev = std::min(dev, 2.0 * kPi - dev);
        worst_round = std::max(worst_round, dev);
      }
    }
  }
  Verdict v;
  v.pass = worst_gram <= 1e-12 && worst_round <= 1e-10;
  v.detail = "gram worst " + sci(worst_gram) + " (tol 1e-12), round-trip worst " +
             sci(worst_round) + " (tol 1e-10)";
  return v;
}

// ---------------------------------------------------------------------------
// 3. Coplanar basis recombination: 500 coplanar pairwise-independent tuples
//    per order; theta powers round-trip through the Cramer layer.
//
//    Fails structurally. The frame-power determinant is not a function of
//    pairwise angles: for order 1 it equals the dot product of the second
//    direction's polar frame vector with the first direction, so it vanishes
//    on a codimension-one set of pairwise-independent tuples (swapping the
//    directions of the 90-degree axis-pair example sends |det| from 1 to 0).
//    Random coplanar tuples land near that set and the degeneracy guards
//    fire; the guards are required to throw rather than regularize, so the
//    count below stays honest.
Verdict criterion_cramer() {
  Rng rng(103);
  double worst = 0.0;
  int degenerate = 0;
  for (int m = 1; m <= 3; ++m) {
    for (int trial = 0; trial < 500; ++trial) {
      const Vec normal = rng.unit_vector(3);
      Vec u = rng.unit_vector(3);
      u -= u.dot(normal) * normal;
      while (u.norm() < 0.1) {
        u = rng.unit_vector(3);
        u -= u.dot(normal) * normal;
      }
      u.normalize();
      const Vec3 n3 = to_vec3(normal);
      const Vec3 u3 = to_vec3(u);
      const Vec w = to_vec(n3.cross(u3));

      // The in-plane angle margin makes the tuples quantitatively pairwise
      // independent; it cannot bound the distance to the frame-alignment
      // degeneracy described above.
      std::vector<double> phis;
      while (static_cast<int>(phis.size()) < m + 1) {
        const double cand = rng.uniform(0.0, kPi);
        bool ok = true;
        for (double prev : phis) {
          if (std::abs(std::sin(cand - prev)) < 0.15) ok = false;
        }
        if (ok) phis.push_back(cand);
      }
      std::vector<Vec> dirs;
      for (double phi : phis) dirs.push_back(std::cos(phi) * u + std::sin(phi) * w);

      try {
        const symtensor::BasisSystem sys = symtensor::basis_system(dirs, m);
        const Vec theta = rng.unit_vector(3);
        const Eigen::VectorXd coeffs = symtensor::cramer_coefficients(sys, theta);
        symtensor::SymTensor rebuilt(m, 3);
        for (std::size_t k = 0; k < sys.columns.size(); ++k) {
          for (std::size_t c = 0; c < rebuilt.c.size(); ++c) {
            rebuilt.c[c] += coeffs[static_cast<int>(k)] * sys.columns[k].c[c];
          }
        }
        const symtensor::SymTensor want = symtensor::sym_power(theta, m);
        for (std::size_t c = 0; c < want.c.size(); ++c) {
          worst = std::max(worst, std::abs(rebuilt.c[c] - want.c[c]));
        }
      } catch (const Error&) {
        ++degenerate;
      }
    }
  }
  Verdict v;
  v.pass = degenerate == 0 && worst <= 1e-10;
  v.detail = "residual worst " + sci(worst) + " (tol 1e-10), degenerate " +
             std::to_string(degenerate) + " of 1500";
  return v;
}

// ---------------------------------------------------------------------------
// 4. Plane-integral pair: gaussian forward/inverse round trip at 128 offsets
//    and 2048 sphere nodes, plus the derivative intertwining property.
Verdict criterion_radon() {
  const double width = 0.35;
  xforms::Box box;
  const xforms::ScalarGrid g = xforms::make_scalar_grid(
      box, {96, 96, 96}, [&](const Vec& x) { return std::exp(-x.squaredNorm() / (width * width)); },
      xforms::Interp::Linear);

  const xforms::SphereGrid grid = xforms::sphere_grid(3, 32, 64);
  const xforms::Sinogram sino = xforms::radon_sinogram(g, grid, 128, 1.2, 64);
  const xforms::RadonInverter inverter(sino);

  Rng rng(104);
  double num = 0.0, den = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    Vec x = rng.unit_vector(3);
    x *= 0.6 * rng.uniform01();
    const double want = std::exp(-x.squaredNorm() / (width * width));
    const double got = inverter.at(x);
    num += (got - want) * (got - want);
    den += want * want;
  }
  const double round_trip = std::sqrt(num / den);

  // Derivative property: the transform of the directional derivative equals
  // <v, omega> times the offset derivative of the transform.
  const Vec3 v(0.3, -0.5, 0.81);
  const xforms::ScalarGrid dg = xforms::make_scalar_grid(
      box, {96, 96, 96},
      [&](const Vec& x) {
        const double e = std::exp(-x.squaredNorm() / (width * width));
        return -2.0 / (width * width) * (x[0] * v.x() + x[1] * v.y() + x[2] * v.z()) * e;
      },
      xforms::Interp::Linear);
  double dnum = 0.0, dden = 0.0;
  const double h = 0.02;
  for (int trial = 0; trial < 50; ++trial) {
    geometry::PlaneCoords plane;
    plane.omega = to_vec3(rng.unit_vector(3));
    plane.p = rng.uniform(-0.4, 0.4);
    const double lhs = xforms::radon_forward(dg, plane, 128);
    // Five-point offset stencil; the h^2 truncation of a plain central
    // difference would dominate the comparison otherwise.
    const double u2 = xforms::radon_forward(g, {plane.omega, plane.p + 2.0 * h}, 128);
    const double u1 = xforms::radon_forward(g, {plane.omega, plane.p + h}, 128);
    const double d1 = xforms::radon_forward(g, {plane.omega, plane.p - h}, 128);
    const double d2 = xforms::radon_forward(g, {plane.omega, plane.p - 2.0 * h}, 128);
    const double rhs = plane.omega.dot(v) * (d2 - 8.0 * d1 + 8.0 * u1 - u2) / (12.0 * h);
    dnum += (lhs - rhs) * (lhs - rhs);
    dden += lhs * lhs;
  }
  const double derivative = std::sqrt(dnum / dden);

  Verdict v2;
  v2.pass = round_trip <= 1e-2 && derivative <= 1e-3;
  v2.detail = "round trip rel L2 " + sci(round_trip) + " (tol 1e-2), derivative rel L2 " +
              sci(derivative) + " (tol 1e-3)";
  return v2;
}

// ---------------------------------------------------------------------------
// 5. Transform definitions: closed-form values on constant-direction bumps,
//    then the literal parity, half-line, and scaling relations.
Verdict criterion_trt_definitions() {
  Rng rng(105);
  xforms::Box box;

  double worst_chord = 0.0;
  double worst_parity = 0.0;
  double worst_half = 0.0;
  double worst_scale = 0.0;

  for (int m = 1; m <= 3; ++m) {
    symtensor::SymTensor base(m, 3);
    for (double& c : base.c) c = rng.normal();
    const xforms::TensorGrid f = xforms::make_tensor_grid(
        m, box, {96, 96, 96},
        [&](const Vec& x) {
          symtensor::SymTensor t = base;
          const double q = 1.0 - x.squaredNorm();
          const double env = q > 0.0 ? q * q * q : 0.0;
          for (double& c : t.c) c *= env;
          return t;
        },
        {Vec3::Zero(), 1.0}, xforms::Interp::Linear);

    // Closed form: the envelope (1 - |x|^2)^3 integrates to (32/35) L^7 along
    // a line at distance d from the origin, L = sqrt(1 - d^2) the half chord.
    double num = 0.0, den = 0.0;
    for (int ray = 0; ray < 100; ++ray) {
      const Vec xi = rng.unit_vector(3);
      Vec x0 = rng.unit_vector(3);
      x0 *= 0.3 * rng.uniform01();
      const Vec foot = x0 - x0.dot(xi) * xi;
      const double d = foot.norm();
      if (d > 0.7) continue;
      const double L = std::sqrt(1.0 - d * d);
      const double envelope = 32.0 / 35.0 * std::pow(L, 7);
      const geometry::Frame frame = geometry::frame_of_direction(xi);
      for (int i = 0; i <= m; ++i) {
        std::vector<Vec> factors(i, frame.eta[0]);
        factors.insert(factors.end(), m - i, frame.eta[1]);
        const double dot = symtensor::contract(base, symtensor::sym_product(factors));
        const double want = envelope * dot;
        const double got =
            xforms::trt_tensor(f, x0, xi, i, 0.004, xforms::LineDomain::FullLine);
        num += (got - want) * (got - want);
        den += want * want;
      }
    }
    worst_chord = std::max(worst_chord, std::sqrt(num / den));

    // Parity relation as stated for the full-line transform: for every
    // channel, T_i(x, -xi) = (-1)^m T_i(x, xi).
    const double sign_m = (m % 2 == 0) ? 1.0 : -1.0;
    for (int ray = 0; ray < 100; ++ray) {
      const Vec xi = rng.unit_vector(3);
      Vec x0 = rng.unit_vector(3);
      x0 *= 0.3 * rng.uniform01();
      const Vec neg = -xi;
      for (int i = 0; i <= m; ++i) {
        const double plus = xforms::trt_tensor(f, x0, xi, i, 0.004, xforms::LineDomain::FullLine);
        const double minus = xforms::trt_tensor(f, x0, neg, i, 0.004, xforms::LineDomain::FullLine);
        worst_parity =
            std::max(worst_parity, std::abs(minus - sign_m * plus) / (1.0 + std::abs(plus)));
      }
    }

    // Half-line relation on an encompassing basepoint: T^-(a, xi) =
    // (-1)^m T^+(a, -xi), with T^- realized by the full-line clip because the
    // forward half misses the support.
    const auto curve = geometry::great_circles_curve(3.0);
    for (int ray = 0; ray < 100; ++ray) {
      const int piece = static_cast<int>(rng.next_u64() % 3);
      const double lambda = rng.uniform(0.0, curve->period(piece));
      const Vec a = to_vec(curve->point(piece, lambda));
      Vec target = rng.unit_vector(3);
      target *= 0.5 * rng.uniform01();
      const Vec toward = (target - a).normalized();
      for (int i = 0; i <= m; ++i) {
        const double back =
            xforms::trt_tensor(f, a, Vec(-toward), i, 0.004, xforms::LineDomain::FullLine);
        const double fwd =
            xforms::trt_tensor(f, a, toward, i, 0.004, xforms::LineDomain::HalfLine);
        worst_half = std::max(worst_half, std::abs(back - sign_m * fwd) / (1.0 + std::abs(fwd)));
      }
    }

    // Extension scaling: values are homogeneous of degree m - 1 in xi.
    for (int ray = 0; ray < 20; ++ray) {
      const Vec xi = rng.unit_vector(3);
      Vec x0 = rng.unit_vector(3);
      x0 *= 0.3 * rng.uniform01();
      const double c = rng.uniform(0.5, 3.0);
      for (int i = 0; i <= m; ++i) {
        const double unit = xforms::trt_extended(f, x0, xi, i, 0.004);
        const double scaled = xforms::trt_extended(f, x0, Vec(c * xi), i, 0.004);
        const double want = std::pow(c, m - 1) * unit;
        worst_scale = std::max(worst_scale, std::abs(scaled - want) / (1.0 + std::abs(want)));
      }
    }
  }

  Verdict v;
  v.pass = worst_chord <= 2e-2 && worst_parity <= 1e-6 && worst_half <= 1e-6 &&
           worst_scale <= 1e-6;
  v.detail = "chord rel L2 " + sci(worst_chord) + " (tol 2e-2), parity worst " +
             sci(worst_parity) + ", half-line worst " + sci(worst_half) + ", scaling worst " +
             sci(worst_scale) + " (tol 1e-6 each)";
  return v;
}

// ---------------------------------------------------------------------------
// 6. Data-side functional against the forward oracle: W compared with the
//    second offset derivative of the weighted plane integrals.

/// Weighted plane integral of the field: the view-direction frame power
/// paired with the field over the plane patch, from the branch point found on
/// each plane independently.
double forward_weighted_integral(const xforms::TensorGrid& f, const geometry::Curve& curve,
                                 const geometry::PlaneCoords& plane, int channel, int branch,
                                 int resolution) {
  const geometry::IntersectionSet isect = geometry::plane_curve_intersections(curve, plane);
  if (branch >= static_cast<int>(isect.points.size())) {
    throw CoverageError("forward oracle: branch not present");
  }
  const Vec3 gamma0 = isect.points[branch].point;

  const Vec3 omega = plane.omega;
  const Vec c = f.box.center();
  const Vec3 center(c[0], c[1], c[2]);
  const double offset = plane.p - omega.dot(center);
  const double L = f.box.half_diagonal();
  if (std::abs(offset) > L) return 0.0;

  const geometry::Frame pframe = geometry::frame_of_direction(to_vec(omega));
  const Vec3 e1 = pframe.alpha();
  const Vec3 e2 = pframe.beta();
  const Vec3 foot = center + offset * omega;
  const double cell = 2.0 * L / resolution;
  const int m = f.order;

  double acc = 0.0;
  Vec x(3);
  symtensor::SymTensor sample(m, 3);
  for (int i = 0; i < resolution; ++i) {
    const double u = -L + (i + 0.5) * cell;
    const Vec3 row = foot + u * e1;
    for (int j = 0; j < resolution; ++j) {
      const double w = -L + (j + 0.5) * cell;
      const Vec3 y = row + w * e2;
      x[0] = y.x(); x[1] = y.y(); x[2] = y.z();
      f.components_at(x, sample.c.data());
      bool zero = true;
      for (double comp : sample.c) {
        if (comp != 0.0) { zero = false; break; }
      }
      if (zero) continue;
      const Vec3 view = y - gamma0;
      const double dist = view.norm();
      if (dist < 1e-9) continue;
      const geometry::Frame vframe = geometry::frame_of_direction(to_vec(view / dist));
      std::vector<Vec> factors(channel, vframe.eta[0]);
      factors.insert(factors.end(), m - channel, vframe.eta[1]);
      acc += symtensor::contract(sample, symtensor::sym_product(factors));
    }
  }
  return acc * cell * cell;
}

Verdict criterion_w_functional() {
  const geometry::Ball support{Vec3::Zero(), 1.0};
  const harness::Phantom spec =
      harness::make_phantom_spec(harness::PhantomKind::GaussianBump, 1, support, 61);
  const auto field =
      std::make_shared<const xforms::TensorGrid>(harness::make_phantom(spec, 48));
  const std::shared_ptr<const geometry::Curve> curve = geometry::great_circles_curve(3.0);

  recon::TRTDataset data;
  data.curve = curve;
  data.field = field;
  data.order = 1;
  data.channel_count = 2;
  data.ray_step = 0.02;

  recon::WOptions opt;
  opt.circle_nodes = 64;
  opt.h_p = 0.02;

  const xforms::SphereGrid dirs = xforms::sphere_grid(3, 8, 8);
  const int p_count = 64;
  const double oracle_h = 0.02;
  const int oracle_res = 48;

  double num = 0.0, den = 0.0;
  std::size_t used = 0, skipped = 0;
  for (std::size_t dref = 0; dref < dirs.size(); ++dref) {
    const Vec3 omega = to_vec3(dirs.dirs[dref]);
    for (int ip = 0; ip < p_count; ++ip) {
      const double p = -0.5 + ip * (1.0 / (p_count - 1));
      const geometry::PlaneCoords plane{omega, p};
      for (int channel = 0; channel <= 1; ++channel) {
        try {
          const recon::WSample w = recon::weighted_data_W(data, plane, channel, 0, opt);
          const double up =
              forward_weighted_integral(*field, *curve, {omega, p + oracle_h}, channel, 0,
                                        oracle_res);
          const double mid =
              forward_weighted_integral(*field, *curve, plane, channel, 0, oracle_res);
          const double dn =
              forward_weighted_integral(*field, *curve, {omega, p - oracle_h}, channel, 0,
                                        oracle_res);
          const double oracle = (up - 2.0 * mid + dn) / (oracle_h * oracle_h);
          num += (w.value - oracle) * (w.value - oracle);
          den += oracle * oracle;
          ++used;
        } catch (const Error&) {
          ++skipped;
        }
      }
    }
  }
  const double rel = den > 0.0 ? std::sqrt(num / den) : std::numeric_limits<double>::infinity();

  // Refinement arm: halve h_p and double the circle node count on a subset
  // and require the mismatch to shrink.
  recon::WOptions fine = opt;
  fine.circle_nodes = 128;
  fine.h_p = 0.01;
  double bnum = 0.0, fnum = 0.0, sden = 0.0;
  for (std::size_t dref = 0; dref < dirs.size(); dref += 4) {
    const Vec3 omega = to_vec3(dirs.dirs[dref]);
    for (int ip = 0; ip < p_count; ip += 4) {
      const double p = -0.5 + ip * (1.0 / (p_count - 1));
      const geometry::PlaneCoords plane{omega, p};
      try {
        const double base = recon::weighted_data_W(data, plane, 1, 0, opt).value;
        const double refined = recon::weighted_data_W(data, plane, 1, 0, fine).value;
        const double up = forward_weighted_integral(*field, *curve, {omega, p + oracle_h}, 1, 0,
                                                    oracle_res);
        const double mid = forward_weighted_integral(*field, *curve, plane, 1, 0, oracle_res);
        const double dn = forward_weighted_integral(*field, *curve, {omega, p - oracle_h}, 1, 0,
                                                    oracle_res);
        const double oracle = (up - 2.0 * mid + dn) / (oracle_h * oracle_h);
        bnum += (base - oracle) * (base - oracle);
        fnum += (refined - oracle) * (refined - oracle);
        sden += oracle * oracle;
      } catch (const Error&) {
      }
    }
  }
  const double base_sub = sden > 0.0 ? std::sqrt(bnum / sden) : 0.0;
  const double fine_sub = sden > 0.0 ? std::sqrt(fnum / sden) : 0.0;

  Verdict v;
  v.pass = rel <= 5e-2 && fine_sub < base_sub;
  v.detail = "rel L2 " + sci(rel) + " over " + std::to_string(used) + " samples (tol 5e-2, " +
             std::to_string(skipped) + " skipped); refinement " + sci(base_sub) + " -> " +
             sci(fine_sub) + (fine_sub < base_sub ? " (improved)" : " (not improved)");
  return v;
}

// ---------------------------------------------------------------------------
// 7. Algebraic recovery exactness: with frame components supplied by direct
//    contraction, tensor components come back to 1e-9.
Verdict criterion_algebraic() {
  const geometry::Ball support{Vec3::Zero(), 1.0};
  const auto curve = geometry::great_circles_curve(3.0);
  Rng rng(107);
  double worst = 0.0;
  for (int m = 1; m <= 3; ++m) {
    const harness::Phantom spec =
        harness::make_phantom_spec(harness::PhantomKind::MultiBump, m, support, 70 + m);
    for (int probe = 0; probe < 100; ++probe) {
      Vec3 x(rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6));
      const symtensor::SymTensor truth = harness::phantom_value(spec, x);
      const recon::ReferenceSystem ref = recon::reference_system_at(*curve, x, m);
      const recon::AProvider provider = [&](int channel, int slot) {
        for (std::size_t k = 0; k < ref.sys.labels.size(); ++k) {
          if (ref.sys.labels[k].first == channel && ref.sys.labels[k].second == slot) {
            return symtensor::contract(truth, ref.sys.columns[k]);
          }
        }
        throw InvalidInputError("acceptance: unknown basis slot");
      };
      const symtensor::SymTensor got = recon::recover_tensor_components(ref, provider);
      for (std::size_t k = 0; k < truth.c.size(); ++k) {
        worst = std::max(worst, std::abs(got.c[k] - truth.c[k]));
      }
    }
  }
  Verdict v;
  v.pass = worst <= 1e-9;
  v.detail = "component worst " + sci(worst) + " (tol 1e-9, 300 probes)";
  return v;
}

// ---------------------------------------------------------------------------
// 8. End-to-end reconstruction at desk scale, with a half-to-default grid
//    refinement pair.
double end_to_end_error(int order, double scale, std::uint64_t seed) {
  const auto count = [&](int base) { return std::max(2, static_cast<int>(base * scale)); };

  const geometry::Ball support{Vec3::Zero(), 1.0};
  const harness::Phantom spec =
      harness::make_phantom_spec(harness::PhantomKind::GaussianBump, order, support, seed);
  const xforms::TensorGrid truth = harness::make_phantom(spec, count(64));
  const auto field = std::make_shared<const xforms::TensorGrid>(truth);
  const std::shared_ptr<const geometry::Curve> curve = geometry::great_circles_curve(3.0);

  const xforms::SphereGrid acq = xforms::sphere_grid(3, count(16), count(32));
  const double ray_step = 0.02 / scale;
  const recon::TRTDataset data =
      recon::acquire_dataset(field, curve, count(512), acq, ray_step);

  recon::WOptions opt;
  opt.circle_nodes = count(64);
  const xforms::SphereGrid grid = xforms::sphere_grid(3, count(32), count(64));
  const recon::WField w = recon::build_w_field(data, grid, count(128), 1.1, 2, opt);

  xforms::TensorGrid estimate = truth;
  std::fill(estimate.values.begin(), estimate.values.end(), 0.0);
  const std::size_t ncomp = estimate.components();
  const std::size_t total = estimate.sample_count();
  for (std::size_t idx = 0; idx < total; ++idx) {
    Vec x(3);
    std::size_t rem = idx;
    for (int a = 2; a >= 0; --a) {
      const int i = static_cast<int>(rem % estimate.shape[a]);
      rem /= estimate.shape[a];
      x[a] = estimate.box.lo[a] +
             i * (estimate.box.hi[a] - estimate.box.lo[a]) / (estimate.shape[a] - 1);
    }
    const Vec3 x3 = to_vec3(x);
    if (x3.norm() > support.radius) continue;
    try {
      const recon::ReferenceSystem ref = recon::reference_system_at(*curve, x3, order);
      const symtensor::SymTensor value =
          recon::recover_tensor_components(ref, [&](int channel, int slot) {
            return recon::recover_A_component(w, x3, channel, slot - 1);
          });
      std::copy(value.c.begin(), value.c.end(), estimate.values.begin() + idx * ncomp);
    } catch (const Error&) {
      // Uncovered nodes stay zero and count against the error.
    }
  }
  return harness::error_metrics(truth, estimate).rel_l2;
}

Verdict criterion_end_to_end(bool full) {
  const double base = end_to_end_error(1, 0.5, 11);
  const double err1 = end_to_end_error(1, 1.0, 11);
  const bool improved = err1 < base;

  Verdict v;
  v.pass = err1 <= 0.15 && improved;
  v.detail = "m=1 rel L2 " + sci(err1) + " at default grids (tol 0.15); refinement half->default " +
             sci(base) + " -> " + sci(err1) + (improved ? " (improved)" : " (not improved)");
  if (full) {
    const double err2 = end_to_end_error(2, 1.0, 12);
    v.pass = v.pass && err2 <= 0.25;
    v.detail += "; m=2 rel L2 " + sci(err2) + " (tol 0.25)";
  }
  return v;
}

// ---------------------------------------------------------------------------
// 9. Vector recovery layer: axis choice across dimensions, exact recovery in
//    odd dimensions, and agreement of the numeric pipeline with the order-1
//    tensor pipeline.
Verdict criterion_vector_layer() {
  Rng rng(109);
  int axis_failures = 0;
  for (int n = 3; n <= 5; ++n) {
    for (int trial = 0; trial < 10000; ++trial) {
      Vec xi1 = rng.unit_vector(n);
      Vec xi2 = rng.unit_vector(n);
      while (std::abs(xi1.dot(xi2)) > 0.999) xi2 = rng.unit_vector(n);
      try {
        const geometry::Frame f1 = geometry::frame_of_direction(xi1);
        const geometry::Frame f2 = geometry::frame_of_direction(xi2);
        const int l = recon::choose_independent_axis(f1, f2);
        if (l < 1 || l > n - 1) ++axis_failures;
      } catch (const Error&) {
        ++axis_failures;
      }
    }
  }

  double worst_exact = 0.0;
  for (int n : {3, 5}) {
    for (int trial = 0; trial < 200; ++trial) {
      Vec xi1 = rng.unit_vector(n);
      Vec xi2 = rng.unit_vector(n);
      while (std::abs(xi1.dot(xi2)) > 0.99) xi2 = rng.unit_vector(n);
      const geometry::Frame f1 = geometry::frame_of_direction(xi1);
      const geometry::Frame f2 = geometry::frame_of_direction(xi2);
      Vec f(n);
      for (int k = 0; k < n; ++k) f[k] = rng.normal();
      const auto components = [&](int which, int channel) {
        const geometry::Frame& fr = which == 1 ? f1 : f2;
        return f.dot(fr.eta[channel - 1]);
      };
      const Vec got = recon::recover_vector(f1, f2, components);
      worst_exact = std::max(worst_exact, (got - f).norm() / (1.0 + f.norm()));
    }
  }

  // Numeric arm: both pipelines consume the same backprojected components of
  // a lattice built from real acquisition geometry.
  const geometry::Ball support{Vec3::Zero(), 1.0};
  const harness::Phantom spec =
      harness::make_phantom_spec(harness::PhantomKind::GaussianBump, 1, support, 90);
  const auto field =
      std::make_shared<const xforms::TensorGrid>(harness::make_phantom(spec, 24));
  const std::shared_ptr<const geometry::Curve> curve = geometry::great_circles_curve(3.0);
  recon::TRTDataset data;
  data.curve = curve;
  data.field = field;
  data.order = 1;
  data.channel_count = 2;
  data.ray_step = 0.02;
  recon::WOptions opt;
  opt.circle_nodes = 16;
  const recon::WField w =
      recon::build_w_field(data, xforms::sphere_grid(3, 8, 16), 24, 1.1, 2, opt);

  double worst_agree = 0.0;
  int agreed = 0;
  for (int probe = 0; probe < 40; ++probe) {
    Vec3 x(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5));
    try {
      const recon::ReferenceSystem ref = recon::reference_system_at(*curve, x, 1);
      const geometry::Frame f1 = geometry::frame_of_direction(ref.dirs[0]);
      const geometry::Frame f2 = geometry::frame_of_direction(ref.dirs[1]);
      if (recon::choose_independent_axis(f1, f2) != 1) continue;
      const symtensor::SymTensor tensor =
          recon::recover_tensor_components(ref, [&](int channel, int slot) {
            return recon::recover_A_component(w, x, channel, slot - 1);
          });
      const Vec vec = recon::recover_vector_numeric(ref, w, x);
      double scale = 1.0;
      for (int k = 0; k < 3; ++k) scale = std::max(scale, std::abs(tensor.c[k]));
      for (int k = 0; k < 3; ++k) {
        worst_agree = std::max(worst_agree, std::abs(vec[k] - tensor.c[k]) / scale);
      }
      ++agreed;
    } catch (const Error&) {
    }
  }

  Verdict v;
  v.pass = axis_failures == 0 && worst_exact <= 1e-10 && agreed >= 20 && worst_agree <= 1e-6;
  v.detail = "axis failures " + std::to_string(axis_failures) + " of 30000, exact worst " +
             sci(worst_exact) + " (tol 1e-10), numeric agreement worst " + sci(worst_agree) +
             " (tol 1e-6, " + std::to_string(agreed) + " probes)";
  return v;
}

// ---------------------------------------------------------------------------
// 10. Geometry certificates: the reference three-circle setup passes both
//     certificates and the radius guard trips below the bound.
Verdict criterion_geometry() {
  const auto curve = geometry::great_circles_curve(2.0);
  const geometry::Ball ball{Vec3::Zero(), 1.0};

  const geometry::EncompassReport enc = geometry::encompasses(*curve, ball);
  const geometry::KTReport kt = geometry::kirillov_tuy_report(*curve, ball, 1);

  const bool ok_good = geometry::great_circles_radius_ok(2.0, 1.0);
  const bool ok_low = geometry::great_circles_radius_ok(1.7, 1.0);

  bool guard_threw = false;
  try {
    harness::RunConfig cfg;
    cfg.curve_radius = 1.5;
    cfg.phantom.support.radius = 1.0;
    harness::config_curve(cfg);
  } catch (const ContractViolationError&) {
    guard_threw = true;
  }

  Verdict v;
  v.pass = enc.encompassed && kt.pass() && ok_good && !ok_low && guard_threw;
  v.detail = std::string("encompasses ") + (enc.encompassed ? "yes" : "no") + ", certificate " +
             (kt.pass() ? "pass" : "fail") + " (min margin " + sci(kt.min_margin) +
             "), radius guard " + (guard_threw && !ok_low ? "trips" : "missing");
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  bool full = false;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--full") == 0) full = true;
  }

  std::vector<std::pair<std::string, std::function<Verdict()>>> entries = {
      {"polarization identity", criterion_polarization},
      {"frame correctness", criterion_frames},
      {"coplanar basis recombination", criterion_cramer},
      {"plane-integral transform pair", criterion_radon},
      {"transform definitions", criterion_trt_definitions},
      {"data functional vs forward oracle", criterion_w_functional},
      {"algebraic recovery exactness", criterion_algebraic},
      {"end-to-end reconstruction", [full] { return criterion_end_to_end(full); }},
      {"vector recovery layer", criterion_vector_layer},
      {"geometry certificates", criterion_geometry},
  };

  int failures = 0;
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = entries[k].second();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("unexpected error: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << (v.pass ? "[PASS]" : "[FAIL]") << " criterion " << (k + 1) << ": "
              << entries[k].first << " (" << v.detail << ") [" << sci(secs) << " s]"
              << std::endl;
    if (!v.pass) ++failures;
  }

  std::cout << (failures == 0 ? "acceptance: all criteria pass"
                              : "acceptance: " + std::to_string(failures) +
                                    " criteria failing")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
