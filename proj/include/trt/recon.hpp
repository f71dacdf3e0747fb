#pragma once

#include <trt/geometry.hpp>
#include <trt/linalg.hpp>
#include <trt/symtensor.hpp>
#include <trt/xforms.hpp>

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace trt::recon {

/// Channel data acquired on the curve. The lattice holds half-line values at
/// (piece, lambda, direction, channel); the field handle backs the continuous
/// evaluations that direction and parameter derivatives need.
struct TRTDataset {
  std::shared_ptr<const geometry::Curve> curve;
  std::shared_ptr<const xforms::TensorGrid> field;
  int order = 0;
  int channel_count = 0;
  int lambda_count = 0;
  xforms::SphereGrid directions;
  std::vector<double> values;
  double ray_step = 0.02;
  std::uint64_t seed = 0;

  double at(int piece, int lambda_index, std::size_t direction, int channel) const;
  /// Half-line extended-transform value from the field handle; xi may be any
  /// nonzero vector.
  double evaluate(const Vec& a, const Vec& xi, int channel) const;
};

/// Fills the lattice with half-line channel values from every curve sample.
/// Requires the curve to encompass the field's support ball.
TRTDataset acquire_dataset(std::shared_ptr<const xforms::TensorGrid> field,
                           std::shared_ptr<const geometry::Curve> curve, int lambda_count,
                           const xforms::SphereGrid& directions, double ray_step);

/// Directional data derivative omega_k d/dxi_k of the extended channel data
/// at basepoint gamma0, realized as a central difference along omega. xi must
/// be orthogonal to omega (it lies on the circle S(omega)).
double apply_L(const TRTDataset& data, const Vec3& omega, const Vec3& gamma0, const Vec3& xi,
               int channel, double h_xi = 1e-3);

struct WOptions {
  int circle_nodes = 64;
  double h_p = 1e-2;
  double h_lambda = 1e-3;
  double h_xi = 1e-3;
  /// Transversality threshold on |<omega, gamma'>| / |gamma'|.
  double tangency_tol = 1e-6;
};

/// One sample of the data-side functional, with both constituents kept for
/// diagnostics: value = plane_term - anchor_term.
struct WSample {
  double value = 0.0;
  double plane_term = 0.0;
  double anchor_term = 0.0;
};

/// The data functional at one plane and branch: the p-derivative of the
/// circle integral of L-differentiated data (curve intersection re-solved on
/// the neighboring planes) minus the circle integral of the anchored
/// lambda-derivative term. Throws TangencyError at tangential intersections
/// and CoverageError when the branch does not exist or cannot be followed to
/// the neighboring planes.
WSample weighted_data_W(const TRTDataset& data, const geometry::PlaneCoords& plane, int channel,
                        int branch, const WOptions& opt = {});

/// W lattice over (channel, branch, direction, p) with validity flags for
/// skipped planes.
struct WField {
  xforms::SphereGrid grid;
  double p_min = -1.0;
  double p_max = 1.0;
  int p_count = 0;
  int order = 0;
  int branch_count = 0;

  std::vector<double> values;
  std::vector<std::uint8_t> valid;

  double dp() const { return (p_max - p_min) / (p_count - 1); }
  double p_at(int ip) const { return p_min + ip * dp(); }
  std::size_t index(int channel, int branch, std::size_t dir, int ip) const;
};

/// Builds the full W lattice. The p-derivative inside W is the central
/// difference across the lattice's own neighboring planes, so opt.h_p is
/// ignored here in favor of the lattice spacing.
WField build_w_field(const TRTDataset& data, const xforms::SphereGrid& grid, int p_count,
                     double p_max, int branch_count, const WOptions& opt = {});

/// Backprojection of one (channel, branch) slice of W with the odd-n
/// inversion constant: the frame-component estimate at x. Directions whose
/// samples at p = <x, omega> are invalid are dropped and the quadrature
/// weights renormalized.
double recover_A_component(const WField& w, const Vec3& x, int channel, int branch);

/// Reconstruction-side view geometry at a point: a fixed-normal plane through
/// x, the chosen curve intersection points, the unit view directions, and the
/// basis system they generate.
struct ReferenceSystem {
  geometry::PlaneCoords plane;
  std::vector<geometry::CurvePoint> gammas;
  std::vector<Vec> dirs;
  symtensor::BasisSystem sys;
};

/// Fixed generic plane normal used by default for reference systems.
Vec3 default_reference_normal();

/// Builds the reference system at x: intersects the plane through x with the
/// curve, walks the (piece, lambda)-sorted points, and keeps the first
/// order+1 pairwise-independent view directions. Throws CoverageError when
/// the plane does not supply enough usable points.
ReferenceSystem reference_system_at(const geometry::Curve& curve, const Vec3& x, int order,
                                    const Vec3& normal = default_reference_normal(),
                                    double tol = 1e-6);

/// Supplies frame-component values <f(x), A_(channel, slot)> for the slots of
/// a reference system; slot is 1-based as in the basis column labels.
using AProvider = std::function<double(int channel, int slot)>;

/// <f(x), theta^(sym m)> by Cramer recombination of the provided components;
/// a_values follows the basis column order.
double recover_power(const ReferenceSystem& ref, const Vec& theta,
                     const std::vector<double>& a_values);

/// All components of f(x): polarization over subset sums of basis vectors,
/// each pure power recombined through the reference system.
symtensor::SymTensor recover_tensor_components(const ReferenceSystem& ref,
                                               const AProvider& provider);

/// Smallest axis index l (1-based) such that eta_l of frame2 completes the
/// tangent frame of frame1 to a basis of R^n.
int choose_independent_axis(const geometry::Frame& frame1, const geometry::Frame& frame2,
                            double tol = 1e-6);

/// Vector-field recovery from frame components. components(1, k) supplies
/// <f, eta_k(xi_1)> for k = 1..n-1; components(2, l) supplies <f, eta_l(xi_2)>
/// for the chosen axis l. Dimension must be odd.
Vec recover_vector(const geometry::Frame& frame1, const geometry::Frame& frame2,
                   const std::function<double(int which, int channel)>& components,
                   double tol = 1e-6);

/// Numeric n=3 vector pipeline on top of a W lattice; reuses the tensor
/// channel map eta_1 = alpha, eta_2 = beta.
Vec recover_vector_numeric(const ReferenceSystem& ref, const WField& w, const Vec3& x);

/// Dataset persistence in the grid container format. The field payload lives
/// in its own file; load reattaches the supplied handle.
void save_dataset(const std::string& path, const TRTDataset& data);
TRTDataset load_dataset(const std::string& path,
                        std::shared_ptr<const xforms::TensorGrid> field);

void save_w_field(const std::string& path, const WField& w);
WField load_w_field(const std::string& path);

}  // namespace trt::recon
