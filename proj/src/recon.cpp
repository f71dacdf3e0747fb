#include <trt/recon.hpp>

#include <trt/errors.hpp>
#include <trt/parallel.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>

namespace trt::recon {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_channel(const TRTDataset& data, int channel) {
  if (channel < 0 || channel >= data.channel_count) {
    throw InvalidInputError("trt dataset: channel out of range");
  }
}

// Half-line extended values for all channels in one ray sweep.
void evaluate_all(const TRTDataset& data, const Vec3& a, const Vec3& xi, double* out) {
  xforms::trt_extended_all(*data.field, to_vec(a), to_vec(xi), data.ray_step,
                           xforms::LineDomain::HalfLine, out);
}

// omega-directional central difference of the extended data in xi, every
// channel at once.
void apply_L_all(const TRTDataset& data, const Vec3& omega, const Vec3& gamma0, const Vec3& xi,
                 double h_xi, double* out) {
  const int nc = data.channel_count;
  std::vector<double> plus(nc), minus(nc);
  evaluate_all(data, gamma0, xi + h_xi * omega, plus.data());
  evaluate_all(data, gamma0, xi - h_xi * omega, minus.data());
  for (int i = 0; i < nc; ++i) out[i] = (plus[i] - minus[i]) / (2.0 * h_xi);
}

// In-plane orthonormal basis spanning S(omega).
struct CircleBasis {
  Vec3 e1, e2;
};

CircleBasis circle_basis(const Vec3& omega) {
  const geometry::Frame frame = geometry::frame_of_direction(to_vec(omega));
  return {frame.alpha(), frame.beta()};
}

// Trapezoid rule over the unit circle of directions orthogonal to omega,
// integrand = L-differentiated data anchored at gamma0; all channels.
std::vector<double> circle_L_integral(const TRTDataset& data, const Vec3& omega,
                                      const Vec3& gamma0, const WOptions& opt) {
  const int nc = data.channel_count;
  const CircleBasis basis = circle_basis(omega);
  std::vector<double> acc(nc, 0.0), node(nc);
  for (int k = 0; k < opt.circle_nodes; ++k) {
    const double ang = kTwoPi * k / opt.circle_nodes;
    const Vec3 xi = std::cos(ang) * basis.e1 + std::sin(ang) * basis.e2;
    apply_L_all(data, omega, gamma0, xi, opt.h_xi, node.data());
    for (int i = 0; i < nc; ++i) acc[i] += node[i];
  }
  for (int i = 0; i < nc; ++i) acc[i] *= kTwoPi / opt.circle_nodes;
  return acc;
}

// Circle integral of the anchored term: (dlambda/dp) times the lambda
// derivative of the L-differentiated data, basepoint moving along the curve.
std::vector<double> circle_Ltilde_integral(const TRTDataset& data, const Vec3& omega,
                                           const geometry::CurvePoint& g0, const WOptions& opt) {
  const int nc = data.channel_count;
  const geometry::Curve& curve = *data.curve;
  const Vec3 vel = curve.velocity(g0.piece, g0.lambda);
  const double lambda_prime = 1.0 / omega.dot(vel);
  const Vec3 gp = curve.point(g0.piece, g0.lambda + opt.h_lambda);
  const Vec3 gm = curve.point(g0.piece, g0.lambda - opt.h_lambda);

  const CircleBasis basis = circle_basis(omega);
  std::vector<double> acc(nc, 0.0), plus(nc), minus(nc);
  for (int k = 0; k < opt.circle_nodes; ++k) {
    const double ang = kTwoPi * k / opt.circle_nodes;
    const Vec3 xi = std::cos(ang) * basis.e1 + std::sin(ang) * basis.e2;
    apply_L_all(data, omega, gp, xi, opt.h_xi, plus.data());
    apply_L_all(data, omega, gm, xi, opt.h_xi, minus.data());
    for (int i = 0; i < nc; ++i) {
      acc[i] += lambda_prime * (plus[i] - minus[i]) / (2.0 * opt.h_lambda);
    }
  }
  for (int i = 0; i < nc; ++i) acc[i] *= kTwoPi / opt.circle_nodes;
  return acc;
}

geometry::CurvePoint branch_point(const geometry::Curve& curve,
                                  const geometry::IntersectionSet& isect, const Vec3& omega,
                                  int branch, double tangency_tol) {
  if (branch < 0 || branch >= static_cast<int>(isect.points.size())) {
    std::ostringstream msg;
    msg << "W: plane provides " << isect.points.size() << " intersection points, branch "
        << branch << " requested";
    throw CoverageError(msg.str());
  }
  const geometry::CurvePoint cp = isect.points[branch];
  const Vec3 vel = curve.velocity(cp.piece, cp.lambda);
  if (std::abs(omega.dot(vel)) < tangency_tol * vel.norm()) {
    throw TangencyError("W: tangential curve intersection at the requested branch");
  }
  return cp;
}

// Follows a branch to a neighboring plane: nearest same-piece point in the
// wrapped lambda metric, rejected when the jump exceeds an eighth period.
struct BranchMatch {
  geometry::CurvePoint point;
  int sorted_index = -1;
};

std::optional<BranchMatch> match_branch(const geometry::Curve& curve,
                                        const geometry::IntersectionSet& neighbor,
                                        const geometry::CurvePoint& ref) {
  const double T = curve.period(ref.piece);
  double best = std::numeric_limits<double>::infinity();
  std::optional<BranchMatch> out;
  for (std::size_t k = 0; k < neighbor.points.size(); ++k) {
    const auto& cp = neighbor.points[k];
    if (cp.piece != ref.piece) continue;
    double d = std::abs(cp.lambda - ref.lambda);
    d = std::min(d, T - d);
    if (d < best) {
      best = d;
      out = BranchMatch{cp, static_cast<int>(k)};
    }
  }
  if (!out || best > T / 8.0) return std::nullopt;
  return out;
}

}  // namespace

double TRTDataset::at(int piece, int lambda_index, std::size_t direction, int channel) const {
  const std::size_t idx =
      ((static_cast<std::size_t>(piece) * lambda_count + lambda_index) * directions.size() +
       direction) *
          channel_count +
      channel;
  return values[idx];
}

double TRTDataset::evaluate(const Vec& a, const Vec& xi, int channel) const {
  check_channel(*this, channel);
  return xforms::trt_extended(*field, a, xi, channel, ray_step, xforms::LineDomain::HalfLine);
}

TRTDataset acquire_dataset(std::shared_ptr<const xforms::TensorGrid> field,
                           std::shared_ptr<const geometry::Curve> curve, int lambda_count,
                           const xforms::SphereGrid& directions, double ray_step) {
  if (!field || !curve) throw InvalidInputError("acquire_dataset: null field or curve");
  if (lambda_count < 2) throw InvalidInputError("acquire_dataset: lambda_count too small");
  if (field->dim != 3) throw InvalidInputError("acquire_dataset: field must live in R^3");

  const geometry::EncompassReport enc = geometry::encompasses(*curve, field->support);
  if (!enc.encompassed) {
    std::ostringstream msg;
    msg << "acquire_dataset: curve does not encompass the support ball (witness point ("
        << enc.witness_point.x() << ", " << enc.witness_point.y() << ", "
        << enc.witness_point.z() << "))";
    throw ContractViolationError(msg.str());
  }

  TRTDataset data;
  data.curve = curve;
  data.field = field;
  data.order = field->order;
  data.channel_count = field->order + 1;
  data.lambda_count = lambda_count;
  data.directions = directions;
  data.ray_step = ray_step;

  const int pieces = curve->piece_count();
  const std::size_t dirs = directions.size();
  data.values.assign(static_cast<std::size_t>(pieces) * lambda_count * dirs * data.channel_count,
                     0.0);

  parallel_for(static_cast<std::size_t>(pieces) * lambda_count, [&](std::size_t task) {
    const int piece = static_cast<int>(task / lambda_count);
    const int il = static_cast<int>(task % lambda_count);
    const double lambda = curve->period(piece) * il / lambda_count;
    const Vec a = to_vec(curve->point(piece, lambda));
    std::vector<double> chan(data.channel_count);
    for (std::size_t d = 0; d < dirs; ++d) {
      xforms::trt_tensor_all(*field, a, directions.dirs[d], ray_step,
                             xforms::LineDomain::HalfLine, chan.data());
      const std::size_t base = (task * dirs + d) * data.channel_count;
      std::copy(chan.begin(), chan.end(), data.values.begin() + base);
    }
  });
  return data;
}

double apply_L(const TRTDataset& data, const Vec3& omega, const Vec3& gamma0, const Vec3& xi,
               int channel, double h_xi) {
  check_channel(data, channel);
  if (std::abs(omega.normalized().dot(xi.normalized())) > 1e-8) {
    throw InvalidInputError("apply_L: xi must be orthogonal to omega");
  }
  std::vector<double> out(data.channel_count);
  apply_L_all(data, omega.normalized(), gamma0, xi, h_xi, out.data());
  return out[channel];
}

WSample weighted_data_W(const TRTDataset& data, const geometry::PlaneCoords& plane, int channel,
                        int branch, const WOptions& opt) {
  check_channel(data, channel);
  const Vec3 omega = plane.omega.normalized();
  const geometry::Curve& curve = *data.curve;

  const geometry::IntersectionSet mid = geometry::plane_curve_intersections(curve, plane);
  const geometry::CurvePoint g0 = branch_point(curve, mid, omega, branch, opt.tangency_tol);

  const geometry::IntersectionSet plus =
      geometry::plane_curve_intersections(curve, {omega, plane.p + opt.h_p});
  const geometry::IntersectionSet minus =
      geometry::plane_curve_intersections(curve, {omega, plane.p - opt.h_p});
  const auto match_plus = match_branch(curve, plus, g0);
  const auto match_minus = match_branch(curve, minus, g0);
  if (!match_plus || !match_minus) {
    throw CoverageError("W: branch could not be followed to the neighboring planes");
  }

  const std::vector<double> i_plus = circle_L_integral(data, omega, match_plus->point.point, opt);
  const std::vector<double> i_minus =
      circle_L_integral(data, omega, match_minus->point.point, opt);
  const std::vector<double> anchor = circle_Ltilde_integral(data, omega, g0, opt);

  WSample s;
  s.plane_term = (i_plus[channel] - i_minus[channel]) / (2.0 * opt.h_p);
  s.anchor_term = anchor[channel];
  s.value = s.plane_term - s.anchor_term;
  return s;
}

std::size_t WField::index(int channel, int branch, std::size_t dir, int ip) const {
  return ((static_cast<std::size_t>(channel) * branch_count + branch) * grid.size() + dir) *
             p_count +
         ip;
}

WField build_w_field(const TRTDataset& data, const xforms::SphereGrid& grid, int p_count,
                     double p_max, int branch_count, const WOptions& opt) {
  if (grid.n != 3) throw InvalidInputError("build_w_field: direction grid must live on S^2");
  if (p_count < 3) throw InvalidInputError("build_w_field: need at least 3 offsets");
  if (branch_count < 1) throw InvalidInputError("build_w_field: need at least one branch");

  WField w;
  w.grid = grid;
  w.p_min = -p_max;
  w.p_max = p_max;
  w.p_count = p_count;
  w.order = data.order;
  w.branch_count = branch_count;
  const std::size_t total =
      static_cast<std::size_t>(data.channel_count) * branch_count * grid.size() * p_count;
  w.values.assign(total, 0.0);
  w.valid.assign(total, 0);

  const geometry::Curve& curve = *data.curve;
  const double dp = w.dp();

  parallel_for(grid.size(), [&](std::size_t d) {
    const Vec3 omega = to_vec3(grid.dirs[d]);

    std::vector<geometry::IntersectionSet> isects(p_count);
    for (int ip = 0; ip < p_count; ++ip) {
      isects[ip] = geometry::plane_curve_intersections(curve, {omega, w.p_at(ip)});
    }

    // Lazily filled circle-integral cache over (plane, sorted branch), all
    // channels per entry; the plane-term stencil touches neighbors of the
    // requested branches only.
    std::vector<std::vector<std::vector<double>>> cache(p_count);
    for (int ip = 0; ip < p_count; ++ip) cache[ip].resize(isects[ip].points.size());
    auto integral_at = [&](int ip, int sorted_index) -> const std::vector<double>& {
      auto& slot = cache[ip][sorted_index];
      if (slot.empty()) {
        slot = circle_L_integral(data, omega, isects[ip].points[sorted_index].point, opt);
      }
      return slot;
    };

    for (int ip = 0; ip < p_count; ++ip) {
      for (int j = 0; j < branch_count; ++j) {
        geometry::CurvePoint g0;
        try {
          g0 = branch_point(curve, isects[ip], omega, j, opt.tangency_tol);
        } catch (const Error&) {
          continue;
        }

        const int ia = (ip == 0) ? 0 : ip - 1;
        const int ib = (ip == p_count - 1) ? p_count - 1 : ip + 1;
        std::optional<BranchMatch> ma =
            (ia == ip) ? BranchMatch{g0, j} : match_branch(curve, isects[ia], g0);
        std::optional<BranchMatch> mb =
            (ib == ip) ? BranchMatch{g0, j} : match_branch(curve, isects[ib], g0);
        if (!ma || !mb) continue;

        const std::vector<double>& ia_vals = integral_at(ia, ma->sorted_index);
        const std::vector<double>& ib_vals = integral_at(ib, mb->sorted_index);
        std::vector<double> anchor;
        try {
          anchor = circle_Ltilde_integral(data, omega, g0, opt);
        } catch (const Error&) {
          continue;
        }

        const double denom = (ib - ia) * dp;
        for (int ch = 0; ch < data.channel_count; ++ch) {
          const double plane_term = (ib_vals[ch] - ia_vals[ch]) / denom;
          const std::size_t idx = w.index(ch, j, d, ip);
          w.values[idx] = plane_term - anchor[ch];
          w.valid[idx] = 1;
        }
      }
    }
  });
  return w;
}

double recover_A_component(const WField& w, const Vec3& x, int channel, int branch) {
  if (w.grid.n != 3) throw InvalidInputError("recover_A_component: grid must live on S^2");
  if (channel < 0 || channel > w.order) {
    throw InvalidInputError("recover_A_component: channel out of range");
  }
  if (branch < 0 || branch >= w.branch_count) {
    throw InvalidInputError("recover_A_component: branch out of range");
  }
  if (x.norm() > std::min(-w.p_min, w.p_max)) {
    throw OutOfDomainError("recover_A_component: point outside the covered offset range");
  }

  const double dp = w.dp();
  double acc = 0.0;
  double weight_all = 0.0;
  double weight_valid = 0.0;
  for (std::size_t d = 0; d < w.grid.size(); ++d) {
    weight_all += w.grid.weights[d];
    const double p = to_vec3(w.grid.dirs[d]).dot(x);
    const double u = (p - w.p_min) / dp;
    if (u < 0.0 || u > w.p_count - 1) continue;
    int j = std::clamp(static_cast<int>(std::floor(u)), 0, w.p_count - 2);
    const double t = u - j;
    const std::size_t i0 = w.index(channel, branch, d, j);
    const std::size_t i1 = w.index(channel, branch, d, j + 1);
    if (!w.valid[i0] || !w.valid[i1]) continue;
    acc += w.grid.weights[d] * ((1.0 - t) * w.values[i0] + t * w.values[i1]);
    weight_valid += w.grid.weights[d];
  }
  if (weight_valid <= 0.0) {
    throw CoverageError("recover_A_component: no valid directions at the requested point");
  }
  // Odd-n inversion constant for n = 3; the second p-derivative already
  // lives inside the W samples.
  const double constant = -1.0 / (8.0 * std::numbers::pi * std::numbers::pi);
  return constant * acc * (weight_all / weight_valid);
}

Vec3 default_reference_normal() { return Vec3(0.3127, 0.4379, 0.8431).normalized(); }

ReferenceSystem reference_system_at(const geometry::Curve& curve, const Vec3& x, int order,
                                    const Vec3& normal, double tol) {
  ReferenceSystem ref;
  ref.plane.omega = normal.normalized();
  ref.plane.p = ref.plane.omega.dot(x);

  const geometry::IntersectionSet isect = geometry::plane_curve_intersections(curve, ref.plane);
  for (const auto& cp : isect.points) {
    if ((x - cp.point).norm() < 1e-12) continue;
    const Vec dir = to_vec((x - cp.point).normalized());
    bool ok = true;
    for (const Vec& c : ref.dirs) {
      if (symtensor::pair_independence_margin({c, dir}) <= tol) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    ref.dirs.push_back(dir);
    ref.gammas.push_back(cp);
    if (static_cast<int>(ref.dirs.size()) == order + 1) break;
  }
  if (static_cast<int>(ref.dirs.size()) < order + 1) {
    std::ostringstream msg;
    msg << "reference_system_at: plane with normal (" << ref.plane.omega.x() << ", "
        << ref.plane.omega.y() << ", " << ref.plane.omega.z() << ") offset " << ref.plane.p
        << " supplies " << ref.dirs.size() << " usable view directions, need " << order + 1;
    throw CoverageError(msg.str());
  }

  ref.sys = symtensor::basis_system(ref.dirs, order, tol);
  return ref;
}

double recover_power(const ReferenceSystem& ref, const Vec& theta,
                     const std::vector<double>& a_values) {
  if (a_values.size() != ref.sys.columns.size()) {
    throw InvalidInputError("recover_power: component count must match the basis columns");
  }
  const Eigen::VectorXd coeffs = symtensor::cramer_coefficients(ref.sys, theta);
  double acc = 0.0;
  for (Eigen::Index k = 0; k < coeffs.size(); ++k) acc += coeffs[k] * a_values[k];
  return acc;
}

symtensor::SymTensor recover_tensor_components(const ReferenceSystem& ref,
                                               const AProvider& provider) {
  const int m = ref.sys.order;
  std::vector<double> a_values;
  a_values.reserve(ref.sys.labels.size());
  for (const auto& [i, j] : ref.sys.labels) a_values.push_back(provider(i, j));

  symtensor::SymTensor out(m, 3);
  if (m == 0) {
    out.c[0] = a_values[0];
    return out;
  }

  const auto& table = symtensor::index_table(m, 3);
  const auto plan = symtensor::polarization_plan(m);
  for (std::size_t k = 0; k < table.size(); ++k) {
    double acc = 0.0;
    for (const auto& term : plan) {
      Vec theta = Vec::Zero(3);
      for (int j = 0; j < m; ++j) {
        if (term.subset & (1u << j)) theta[table.tuples[k][j]] += 1.0;
      }
      acc += term.coeff * recover_power(ref, theta, a_values);
    }
    out.c[k] = acc;
  }
  return out;
}

int choose_independent_axis(const geometry::Frame& frame1, const geometry::Frame& frame2,
                            double tol) {
  const int n = frame1.n;
  if (frame2.n != n) throw InvalidInputError("choose_independent_axis: frame dimensions differ");
  Mat m(n, n);
  for (int k = 0; k < n - 1; ++k) m.col(k) = frame1.eta[k];
  for (int l = 1; l <= n - 1; ++l) {
    m.col(n - 1) = frame2.eta[l - 1];
    if (std::abs(m.determinant()) > tol) return l;
  }
  throw DegenerateSystemError("choose_independent_axis: no tangent axis completes the frame");
}

Vec recover_vector(const geometry::Frame& frame1, const geometry::Frame& frame2,
                   const std::function<double(int which, int channel)>& components, double tol) {
  const int n = frame1.n;
  if (n % 2 == 0) {
    throw UnsupportedDimensionError("recover_vector: even dimensions are not supported");
  }
  const int l = choose_independent_axis(frame1, frame2, tol);

  std::vector<Vec> columns;
  columns.reserve(n);
  std::vector<double> comp(n);
  for (int k = 0; k < n - 1; ++k) {
    columns.push_back(frame1.eta[k]);
    comp[k] = components(1, k + 1);
  }
  columns.push_back(frame2.eta[l - 1]);
  comp[n - 1] = components(2, l);

  Vec out = Vec::Zero(n);
  for (int i = 0; i < n; ++i) {
    Vec e = Vec::Zero(n);
    e[i] = 1.0;
    const symtensor::VectorSolve solve = symtensor::vector_cramer(columns, e);
    double v = 0.0;
    for (int k = 0; k < n; ++k) v += solve.coeffs[k] * comp[k];
    out[i] = v;
  }
  return out;
}

Vec recover_vector_numeric(const ReferenceSystem& ref, const WField& w, const Vec3& x) {
  if (ref.sys.order != 1 || w.order != 1) {
    throw InvalidInputError("recover_vector_numeric: order-1 data required");
  }
  const geometry::Frame f1 = geometry::frame_of_direction(ref.dirs[0]);
  const geometry::Frame f2 = geometry::frame_of_direction(ref.dirs[1]);
  // Channel map for n = 3: eta_1 is the alpha tensor (channel 1), eta_2 the
  // beta tensor (channel 0).
  const auto components = [&](int which, int channel) {
    const int tensor_channel = (channel == 1) ? 1 : 0;
    return recover_A_component(w, x, tensor_channel, which - 1);
  };
  return recover_vector(f1, f2, components);
}

}  // namespace trt::recon
