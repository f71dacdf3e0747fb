#pragma once

#include <trt/geometry.hpp>
#include <trt/linalg.hpp>
#include <trt/symtensor.hpp>

#include <functional>
#include <string>
#include <vector>

namespace trt::xforms {

/// Axis-aligned box in R^n. Grids sample its closed interior inclusively.
struct Box {
  Vec lo = -Vec::Ones(3);
  Vec hi = Vec::Ones(3);

  int dim() const { return static_cast<int>(lo.size()); }
  Vec center() const { return 0.5 * (lo + hi); }
  double half_diagonal() const { return 0.5 * (hi - lo).norm(); }
  bool contains(const Vec& x) const;
};

enum class Interp { Linear, Cubic };

/// Integration domain of a ray quadrature: the half-line t >= 0 from the
/// basepoint, or the full line.
enum class LineDomain { HalfLine, FullLine };

/// Dense scalar raster. Samples sit at the inclusive lattice
/// lo + k * (hi - lo) / (shape - 1); evaluation outside the box returns 0,
/// which encodes compact support.
struct ScalarGrid {
  Box box;
  std::vector<int> shape;
  Interp interp = Interp::Linear;
  std::vector<double> values;

  double value_at(const Vec& x) const;
};

/// Dense raster of symmetric (order, dim) tensors with a declared support
/// ball. Storage is row-major over the axes with the component index fastest.
struct TensorGrid {
  int order = 0;
  int dim = 3;
  Box box;
  std::vector<int> shape;
  geometry::Ball support;
  Interp interp = Interp::Linear;
  std::vector<double> values;

  std::size_t components() const { return symtensor::sym_dim(order, dim); }
  std::size_t sample_count() const;
  /// All components at x into out (size components()); zeros outside the box.
  void components_at(const Vec& x, double* out) const;
  symtensor::SymTensor value_at(const Vec& x) const;
};

/// Samples fn on the lattice of (box, shape).
ScalarGrid make_scalar_grid(const Box& box, const std::vector<int>& shape,
                            const std::function<double(const Vec&)>& fn,
                            Interp interp = Interp::Linear);

/// Samples a tensor field; fn must return tensors of the declared shape.
TensorGrid make_tensor_grid(int order, const Box& box, const std::vector<int>& shape,
                            const std::function<symtensor::SymTensor(const Vec&)>& fn,
                            const geometry::Ball& support, Interp interp = Interp::Linear);

/// Composite trapezoid quadrature of t -> g(a + t xi) over the ray clipped to
/// the grid box; step is the target node spacing along the ray.
double ray_integral(const ScalarGrid& g, const Vec& a, const Vec& xi, double step,
                    LineDomain domain = LineDomain::HalfLine);

/// Transverse ray transform channel i of a symmetric m-tensor field over R^3:
/// the ray integral of <f(a + t xi), alpha^i sym beta^(m-i)> with the frame
/// taken from the canonical angle map of xi.
double trt_tensor(const TensorGrid& f, const Vec& a, const Vec& xi, int channel, double step,
                  LineDomain domain = LineDomain::FullLine);

/// Vector-field channel i in R^n (order 1): ray integral of <f, eta_i>,
/// channels numbered 1..n-1.
double trt_vector(const TensorGrid& f, const Vec& a, const Vec& xi, int channel, double step,
                  LineDomain domain = LineDomain::FullLine);

/// Homogeneous extension |xi|^(m-1) * trt(x, xi/|xi|); defined for every
/// nonzero xi, which makes ambient finite differences in xi well posed.
double trt_extended(const TensorGrid& f, const Vec& x, const Vec& xi, int channel, double step,
                    LineDomain domain = LineDomain::HalfLine);

/// All order+1 tensor channels in one ray sweep; out[i] receives channel i.
/// The samples along the ray are gathered once and dotted with every
/// channel's weight tensor.
void trt_tensor_all(const TensorGrid& f, const Vec& a, const Vec& xi, double step,
                    LineDomain domain, double* out);

/// Extended-transform counterpart of trt_tensor_all.
void trt_extended_all(const TensorGrid& f, const Vec& x, const Vec& xi, double step,
                      LineDomain domain, double* out);

/// Product quadrature grid on S^(n-1): Gauss-Legendre nodes in each polar
/// angle with the sin-power surface factor folded into the weights, uniform
/// trapezoid in the azimuth. Weights sum to the area of the sphere.
struct SphereGrid {
  int n = 3;
  int polar_count = 0;
  int azimuth_count = 0;
  std::vector<std::vector<double>> angles;
  std::vector<Vec> dirs;
  std::vector<double> weights;

  std::size_t size() const { return dirs.size(); }
};

SphereGrid sphere_grid(int n, int polar_count, int azimuth_count);

/// Gauss-Legendre rule on [-1, 1].
void gauss_legendre(int count, std::vector<double>& nodes, std::vector<double>& weights);

/// Sampled plane-integral data on a (direction, offset) lattice. The p grid
/// is uniform over [p_min, p_max] and must cover the support as seen from the
/// origin.
struct Sinogram {
  SphereGrid grid;
  double p_min = -1.0;
  double p_max = 1.0;
  int p_count = 0;
  std::vector<double> values;

  double p_at(int ip) const;
  double dp() const { return (p_max - p_min) / (p_count - 1); }
  double& at(std::size_t dir, int ip) { return values[dir * p_count + ip]; }
  double at(std::size_t dir, int ip) const { return values[dir * p_count + ip]; }
};

/// Midpoint-rule integral of g over the plane patch that covers box by
/// construction (patch half-width = box half-diagonal); resolution is the
/// cell count per in-plane axis. Grid dimension must be 3.
double radon_forward(const ScalarGrid& g, const geometry::PlaneCoords& plane,
                     int resolution = 64);

/// Full forward sweep over a direction grid and a symmetric p lattice,
/// parallel over planes.
Sinogram radon_sinogram(const ScalarGrid& g, const SphereGrid& grid, int p_count,
                        double p_max, int resolution = 64);

/// Backprojection of the (n-1)-th p-derivative with the odd-n inversion
/// constant; precomputes the derivative lattice once. Even n is rejected.
class RadonInverter {
 public:
  explicit RadonInverter(const Sinogram& s, bool smooth = false);
  double at(const Vec& x) const;

 private:
  SphereGrid grid_;
  double p_min_ = 0.0;
  double dp_ = 1.0;
  int p_count_ = 0;
  double constant_ = 0.0;
  std::vector<double> deriv_;
};

/// One-shot inversion at a point; building RadonInverter directly amortizes
/// the derivative pass over many points.
double radon_invert_odd(const Sinogram& s, const Vec& x);

/// Grid container persistence: one JSON header line, then a raw little-endian
/// float64 payload in storage order.
void save_scalar_grid(const std::string& path, const ScalarGrid& g);
ScalarGrid load_scalar_grid(const std::string& path);
void save_tensor_grid(const std::string& path, const TensorGrid& g);
TensorGrid load_tensor_grid(const std::string& path);
void save_sinogram(const std::string& path, const Sinogram& s);
Sinogram load_sinogram(const std::string& path);

}  // namespace trt::xforms
