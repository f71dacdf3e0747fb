#include <trt/xforms.hpp>

#include <trt/errors.hpp>
#include <trt/parallel.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

namespace trt::xforms {

namespace {

constexpr double kPi = std::numbers::pi;

// Per-axis interpolation taps: first sample index and 2 (linear) or 4
// (cubic) weights. Out-of-range taps are clamped at gather time; fields
// vanish near the box boundary so clamping cannot leak support.
struct AxisTaps {
  int base = 0;
  int count = 0;
  double w[4] = {0.0, 0.0, 0.0, 0.0};
};

bool axis_taps(double x, double lo, double hi, int count, Interp interp, AxisTaps& taps) {
  if (x < lo || x > hi) return false;
  const double h = (hi - lo) / (count - 1);
  const double u = (x - lo) / h;
  int j = static_cast<int>(std::floor(u));
  j = std::clamp(j, 0, count - 2);
  const double t = u - j;
  if (interp == Interp::Linear) {
    taps.base = j;
    taps.count = 2;
    taps.w[0] = 1.0 - t;
    taps.w[1] = t;
  } else {
    const double t2 = t * t;
    const double t3 = t2 * t;
    taps.base = j - 1;
    taps.count = 4;
    taps.w[0] = 0.5 * (-t3 + 2.0 * t2 - t);
    taps.w[1] = 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0);
    taps.w[2] = 0.5 * (-3.0 * t3 + 4.0 * t2 + t);
    taps.w[3] = 0.5 * (t3 - t2);
  }
  return true;
}

// Accumulates weight * sample into out[0..ncomp) over the tap product set.
void gather(const double* values, const std::vector<int>& shape, const std::size_t* strides,
            const AxisTaps* taps, int axis, std::size_t offset, double weight, std::size_t ncomp,
            double* out) {
  const AxisTaps& t = taps[axis];
  const int last = static_cast<int>(shape.size()) - 1;
  for (int k = 0; k < t.count; ++k) {
    if (t.w[k] == 0.0) continue;
    const int idx = std::clamp(t.base + k, 0, shape[axis] - 1);
    const std::size_t off = offset + idx * strides[axis];
    const double w = weight * t.w[k];
    if (axis == last) {
      const double* s = values + off * ncomp;
      for (std::size_t c = 0; c < ncomp; ++c) out[c] += w * s[c];
    } else {
      gather(values, shape, strides, taps, axis + 1, off, w, ncomp, out);
    }
  }
}

// Unrolled trilinear accumulation; linear taps are in range by construction
// so no clamping is needed.
void gather3_linear(const double* values, const std::size_t* strides, const AxisTaps* taps,
                    std::size_t ncomp, double* out) {
  for (int i = 0; i < 2; ++i) {
    const double wi = taps[0].w[i];
    if (wi == 0.0) continue;
    const std::size_t oi = (taps[0].base + i) * strides[0];
    for (int j = 0; j < 2; ++j) {
      const double wij = wi * taps[1].w[j];
      if (wij == 0.0) continue;
      const std::size_t oij = oi + (taps[1].base + j) * strides[1];
      for (int k = 0; k < 2; ++k) {
        const double w = wij * taps[2].w[k];
        if (w == 0.0) continue;
        const double* s = values + (oij + taps[2].base + k) * ncomp;
        for (std::size_t c = 0; c < ncomp; ++c) out[c] += w * s[c];
      }
    }
  }
}

using StrideArray = std::array<std::size_t, 8>;

StrideArray sample_strides(const std::vector<int>& shape) {
  StrideArray strides{};
  std::size_t s = 1;
  for (int a = static_cast<int>(shape.size()) - 1; a >= 0; --a) {
    strides[a] = s;
    s *= static_cast<std::size_t>(shape[a]);
  }
  return strides;
}

void check_grid_shape(const Box& box, const std::vector<int>& shape) {
  if (static_cast<int>(shape.size()) != box.dim()) {
    throw InvalidInputError("grid: shape rank must match box dimension");
  }
  for (int s : shape) {
    if (s < 2) throw InvalidInputError("grid: need at least 2 samples per axis");
  }
  for (int a = 0; a < box.dim(); ++a) {
    if (!(box.hi[a] > box.lo[a])) throw InvalidInputError("grid: empty box extent");
  }
}

bool eval_taps(const Box& box, const std::vector<int>& shape, Interp interp, const Vec& x,
               AxisTaps* taps) {
  for (int a = 0; a < box.dim(); ++a) {
    if (!axis_taps(x[a], box.lo[a], box.hi[a], shape[a], interp, taps[a])) return false;
  }
  return true;
}

// Clips the line a + t*xi to the box. Returns false when the intersection is
// empty; otherwise [t0, t1] is the parameter window.
bool clip_to_box(const Box& box, const Vec& a, const Vec& xi, double& t0, double& t1) {
  t0 = -std::numeric_limits<double>::infinity();
  t1 = std::numeric_limits<double>::infinity();
  for (int k = 0; k < box.dim(); ++k) {
    if (std::abs(xi[k]) < 1e-300) {
      if (a[k] < box.lo[k] || a[k] > box.hi[k]) return false;
      continue;
    }
    double ta = (box.lo[k] - a[k]) / xi[k];
    double tb = (box.hi[k] - a[k]) / xi[k];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  return t1 > t0;
}

// Trapezoid quadrature along a clipped ray for several weighted component
// contractions at once. Each weight row has one entry per stored component
// (multiplicities folded in); the ray samples are gathered once per node.
void integrate_weighted_multi(const TensorGrid& f, const Vec& a, const Vec& xi,
                              const std::vector<std::vector<double>>& weight_rows, double step,
                              LineDomain domain, double* out) {
  if (step <= 0.0) throw InvalidInputError("ray quadrature: step must be positive");
  const std::size_t rows = weight_rows.size();
  std::fill(out, out + rows, 0.0);
  double t0, t1;
  if (!clip_to_box(f.box, a, xi, t0, t1)) return;
  if (domain == LineDomain::HalfLine) t0 = std::max(t0, 0.0);
  if (!(t1 > t0)) return;

  const int cells = std::max(1, static_cast<int>(std::ceil((t1 - t0) / step)));
  const double dt = (t1 - t0) / cells;
  const std::size_t ncomp = f.components();
  const auto strides = sample_strides(f.shape);
  std::array<AxisTaps, 8> taps;
  std::vector<double> comps(ncomp);
  const bool fast3 = f.shape.size() == 3 && f.interp == Interp::Linear;

  Vec x = a;
  for (int i = 0; i <= cells; ++i) {
    const double t = t0 + i * dt;
    x = a + t * xi;
    std::fill(comps.begin(), comps.end(), 0.0);
    if (eval_taps(f.box, f.shape, f.interp, x, taps.data())) {
      if (fast3) {
        gather3_linear(f.values.data(), strides.data(), taps.data(), ncomp, comps.data());
      } else {
        gather(f.values.data(), f.shape, strides.data(), taps.data(), 0, 0, 1.0, ncomp,
               comps.data());
      }
    }
    const double edge = (i == 0 || i == cells) ? 0.5 : 1.0;
    for (std::size_t r = 0; r < rows; ++r) {
      const auto& w = weight_rows[r];
      double v = 0.0;
      for (std::size_t c = 0; c < ncomp; ++c) v += w[c] * comps[c];
      out[r] += edge * v;
    }
  }
  for (std::size_t r = 0; r < rows; ++r) out[r] *= dt;
}

double integrate_weighted(const TensorGrid& f, const Vec& a, const Vec& xi,
                          const std::vector<double>& weights, double step, LineDomain domain) {
  double out = 0.0;
  integrate_weighted_multi(f, a, xi, {weights}, step, domain, &out);
  return out;
}

std::vector<double> channel_weights(const geometry::Frame& frame, int order, int channel) {
  using symtensor::SymTensor;
  SymTensor w(order, 3);
  if (order == 0) {
    w.c[0] = 1.0;
  } else {
    std::vector<Vec> factors;
    factors.reserve(order);
    for (int k = 0; k < channel; ++k) factors.push_back(frame.eta[0]);
    for (int k = 0; k < order - channel; ++k) factors.push_back(frame.eta[1]);
    w = symtensor::sym_product(factors);
  }
  const auto& table = symtensor::index_table(order, 3);
  std::vector<double> weights(w.c.size());
  for (std::size_t k = 0; k < w.c.size(); ++k) weights[k] = table.mult[k] * w.c[k];
  return weights;
}

}  // namespace

bool Box::contains(const Vec& x) const {
  for (int a = 0; a < dim(); ++a) {
    if (x[a] < lo[a] || x[a] > hi[a]) return false;
  }
  return true;
}

double ScalarGrid::value_at(const Vec& x) const {
  std::array<AxisTaps, 8> taps;
  if (!eval_taps(box, shape, interp, x, taps.data())) return 0.0;
  const auto strides = sample_strides(shape);
  double out = 0.0;
  if (shape.size() == 3 && interp == Interp::Linear) {
    gather3_linear(values.data(), strides.data(), taps.data(), 1, &out);
  } else {
    gather(values.data(), shape, strides.data(), taps.data(), 0, 0, 1.0, 1, &out);
  }
  return out;
}

std::size_t TensorGrid::sample_count() const {
  std::size_t s = 1;
  for (int v : shape) s *= static_cast<std::size_t>(v);
  return s;
}

void TensorGrid::components_at(const Vec& x, double* out) const {
  const std::size_t ncomp = components();
  std::fill(out, out + ncomp, 0.0);
  std::array<AxisTaps, 8> taps;
  if (!eval_taps(box, shape, interp, x, taps.data())) return;
  const auto strides = sample_strides(shape);
  if (shape.size() == 3 && interp == Interp::Linear) {
    gather3_linear(values.data(), strides.data(), taps.data(), ncomp, out);
  } else {
    gather(values.data(), shape, strides.data(), taps.data(), 0, 0, 1.0, ncomp, out);
  }
}

symtensor::SymTensor TensorGrid::value_at(const Vec& x) const {
  symtensor::SymTensor v(order, dim);
  components_at(x, v.c.data());
  return v;
}

ScalarGrid make_scalar_grid(const Box& box, const std::vector<int>& shape,
                            const std::function<double(const Vec&)>& fn, Interp interp) {
  check_grid_shape(box, shape);
  ScalarGrid g;
  g.box = box;
  g.shape = shape;
  g.interp = interp;
  std::size_t total = 1;
  for (int s : shape) total *= static_cast<std::size_t>(s);
  g.values.resize(total);

  const int n = box.dim();
  parallel_for(total, [&](std::size_t idx) {
    Vec x(n);
    std::size_t rem = idx;
    for (int a = n - 1; a >= 0; --a) {
      const int i = static_cast<int>(rem % shape[a]);
      rem /= shape[a];
      x[a] = box.lo[a] + i * (box.hi[a] - box.lo[a]) / (shape[a] - 1);
    }
    g.values[idx] = fn(x);
  });
  return g;
}

TensorGrid make_tensor_grid(int order, const Box& box, const std::vector<int>& shape,
                            const std::function<symtensor::SymTensor(const Vec&)>& fn,
                            const geometry::Ball& support, Interp interp) {
  check_grid_shape(box, shape);
  TensorGrid g;
  g.order = order;
  g.dim = box.dim();
  g.box = box;
  g.shape = shape;
  g.support = support;
  g.interp = interp;
  const std::size_t ncomp = g.components();
  const std::size_t total = g.sample_count();
  g.values.resize(total * ncomp);

  const int n = box.dim();
  parallel_for(total, [&](std::size_t idx) {
    Vec x(n);
    std::size_t rem = idx;
    for (int a = n - 1; a >= 0; --a) {
      const int i = static_cast<int>(rem % shape[a]);
      rem /= shape[a];
      x[a] = box.lo[a] + i * (box.hi[a] - box.lo[a]) / (shape[a] - 1);
    }
    const symtensor::SymTensor v = fn(x);
    if (v.order != order || v.dim != n) {
      throw InvalidInputError("make_tensor_grid: sample shape mismatch");
    }
    std::copy(v.c.begin(), v.c.end(), g.values.begin() + idx * ncomp);
  });
  return g;
}

double ray_integral(const ScalarGrid& g, const Vec& a, const Vec& xi, double step,
                    LineDomain domain) {
  if (step <= 0.0) throw InvalidInputError("ray_integral: step must be positive");
  if (a.size() != g.box.dim() || xi.size() != g.box.dim()) {
    throw InvalidInputError("ray_integral: dimension mismatch");
  }
  double t0, t1;
  if (!clip_to_box(g.box, a, xi, t0, t1)) return 0.0;
  if (domain == LineDomain::HalfLine) t0 = std::max(t0, 0.0);
  if (!(t1 > t0)) return 0.0;

  const int cells = std::max(1, static_cast<int>(std::ceil((t1 - t0) / step)));
  const double dt = (t1 - t0) / cells;
  double acc = 0.0;
  for (int i = 0; i <= cells; ++i) {
    const double v = g.value_at(a + (t0 + i * dt) * xi);
    acc += (i == 0 || i == cells) ? 0.5 * v : v;
  }
  return acc * dt;
}

double trt_tensor(const TensorGrid& f, const Vec& a, const Vec& xi, int channel, double step,
                  LineDomain domain) {
  if (f.dim != 3) throw InvalidInputError("trt_tensor: field must live in R^3");
  if (channel < 0 || channel > f.order) throw InvalidInputError("trt_tensor: channel out of range");
  const double norm = xi.norm();
  if (norm < 1e-12) throw InvalidInputError("trt_tensor: zero direction");
  const Vec u = xi / norm;
  const geometry::Frame frame = geometry::frame_of_direction(u);
  return integrate_weighted(f, a, u, channel_weights(frame, f.order, channel), step, domain);
}

double trt_vector(const TensorGrid& f, const Vec& a, const Vec& xi, int channel, double step,
                  LineDomain domain) {
  if (f.order != 1) throw InvalidInputError("trt_vector: field must have order 1");
  const int n = f.dim;
  if (channel < 1 || channel > n - 1) throw InvalidInputError("trt_vector: channel out of range");
  const double norm = xi.norm();
  if (norm < 1e-12) throw InvalidInputError("trt_vector: zero direction");
  const Vec u = xi / norm;
  const geometry::Frame frame = geometry::frame_of_direction(u);
  const Vec& eta = frame.eta[channel - 1];
  std::vector<double> weights(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) weights[k] = eta[k];
  return integrate_weighted(f, a, u, weights, step, domain);
}

double trt_extended(const TensorGrid& f, const Vec& x, const Vec& xi, int channel, double step,
                    LineDomain domain) {
  const double norm = xi.norm();
  if (norm < 1e-12) throw InvalidInputError("trt_extended: zero direction");
  return std::pow(norm, f.order - 1) * trt_tensor(f, x, xi / norm, channel, step, domain);
}

void trt_tensor_all(const TensorGrid& f, const Vec& a, const Vec& xi, double step,
                    LineDomain domain, double* out) {
  if (f.dim != 3) throw InvalidInputError("trt_tensor: field must live in R^3");
  const double norm = xi.norm();
  if (norm < 1e-12) throw InvalidInputError("trt_tensor: zero direction");
  const Vec u = xi / norm;
  const geometry::Frame frame = geometry::frame_of_direction(u);
  std::vector<std::vector<double>> rows;
  rows.reserve(f.order + 1);
  for (int i = 0; i <= f.order; ++i) rows.push_back(channel_weights(frame, f.order, i));
  integrate_weighted_multi(f, a, u, rows, step, domain, out);
}

void trt_extended_all(const TensorGrid& f, const Vec& x, const Vec& xi, double step,
                      LineDomain domain, double* out) {
  const double norm = xi.norm();
  if (norm < 1e-12) throw InvalidInputError("trt_extended: zero direction");
  trt_tensor_all(f, x, xi / norm, step, domain, out);
  const double scale = std::pow(norm, f.order - 1);
  for (int i = 0; i <= f.order; ++i) out[i] *= scale;
}

void gauss_legendre(int count, std::vector<double>& nodes, std::vector<double>& weights) {
  if (count < 1) throw InvalidInputError("gauss_legendre: count must be positive");
  nodes.assign(count, 0.0);
  weights.assign(count, 0.0);
  for (int i = 0; i < count; ++i) {
    // Newton iteration on P_count from the Chebyshev-like initial guess.
    double x = std::cos(kPi * (i + 0.75) / (count + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= count; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      const double pn = (count == 1) ? x : p1;
      const double pm = (count == 1) ? 1.0 : p0;
      dp = count * (x * pn - pm) / (x * x - 1.0);
      const double dx = pn / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[i] = x;
    weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
}

SphereGrid sphere_grid(int n, int polar_count, int azimuth_count) {
  if (n < 2 || n > 8) throw InvalidInputError("sphere_grid: dimension out of range");
  if (azimuth_count < 1 || (n > 2 && polar_count < 1)) {
    throw InvalidInputError("sphere_grid: node counts must be positive");
  }

  SphereGrid grid;
  grid.n = n;
  grid.polar_count = (n > 2) ? polar_count : 0;
  grid.azimuth_count = azimuth_count;

  std::vector<double> gl_nodes, gl_weights;
  const int polar_axes = n - 2;
  if (polar_axes > 0) gauss_legendre(polar_count, gl_nodes, gl_weights);

  std::size_t total = azimuth_count;
  for (int a = 0; a < polar_axes; ++a) total *= static_cast<std::size_t>(polar_count);
  grid.angles.reserve(total);
  grid.dirs.reserve(total);
  grid.weights.reserve(total);

  std::vector<int> idx(polar_axes, 0);
  while (true) {
    // Weight of the current polar multi-index; the surface factor on axis k
    // (1-based) is sin^(n-1-k).
    double polar_weight = 1.0;
    std::vector<double> angles(n - 1, 0.0);
    for (int a = 0; a < polar_axes; ++a) {
      const double phi = 0.5 * kPi * (gl_nodes[idx[a]] + 1.0);
      angles[a] = phi;
      polar_weight *= 0.5 * kPi * gl_weights[idx[a]] * std::pow(std::sin(phi), n - 2 - a);
    }
    for (int j = 0; j < azimuth_count; ++j) {
      angles[n - 2] = 2.0 * kPi * j / azimuth_count;
      grid.angles.push_back(angles);
      grid.dirs.push_back(geometry::frame_from_angles(angles).xi);
      grid.weights.push_back(polar_weight * 2.0 * kPi / azimuth_count);
    }
    int a = polar_axes - 1;
    while (a >= 0 && ++idx[a] == polar_count) idx[a--] = 0;
    if (a < 0) break;
  }
  return grid;
}

double Sinogram::p_at(int ip) const { return p_min + ip * dp(); }

double radon_forward(const ScalarGrid& g, const geometry::PlaneCoords& plane, int resolution) {
  if (g.box.dim() != 3) throw InvalidInputError("radon_forward: grid must live in R^3");
  if (resolution < 2) throw InvalidInputError("radon_forward: resolution too small");

  const Vec3 omega = plane.omega.normalized();
  const Vec c = g.box.center();
  const Vec3 center(c[0], c[1], c[2]);
  const double offset = plane.p - omega.dot(center);
  const double L = g.box.half_diagonal();
  // Every box point within distance L of the center projects into the patch
  // [-L, L]^2 around the in-plane foot of the box center.
  if (std::abs(offset) > L) return 0.0;

  const geometry::Frame frame = geometry::frame_of_direction(to_vec(omega));
  const Vec3 e1 = frame.alpha();
  const Vec3 e2 = frame.beta();
  const Vec3 foot = center + offset * omega;
  const double cell = 2.0 * L / resolution;

  double acc = 0.0;
  Vec x(3);
  for (int i = 0; i < resolution; ++i) {
    const double u = -L + (i + 0.5) * cell;
    const Vec3 row = foot + u * e1;
    for (int j = 0; j < resolution; ++j) {
      const double v = -L + (j + 0.5) * cell;
      const Vec3 y = row + v * e2;
      x[0] = y.x(); x[1] = y.y(); x[2] = y.z();
      acc += g.value_at(x);
    }
  }
  return acc * cell * cell;
}

Sinogram radon_sinogram(const ScalarGrid& g, const SphereGrid& grid, int p_count, double p_max,
                        int resolution) {
  if (p_count < 5) throw InvalidInputError("radon_sinogram: need at least 5 offsets");
  if (!(p_max > 0.0)) throw InvalidInputError("radon_sinogram: p_max must be positive");
  Sinogram s;
  s.grid = grid;
  s.p_min = -p_max;
  s.p_max = p_max;
  s.p_count = p_count;
  s.values.assign(grid.size() * static_cast<std::size_t>(p_count), 0.0);

  parallel_for(grid.size(), [&](std::size_t d) {
    const Vec3 omega = to_vec3(grid.dirs[d]);
    for (int ip = 0; ip < p_count; ++ip) {
      s.at(d, ip) = radon_forward(g, {omega, s.p_at(ip)}, resolution);
    }
  });
  return s;
}

namespace {

void second_difference(std::vector<double>& row, double dp) {
  const int n = static_cast<int>(row.size());
  std::vector<double> out(n);
  const double inv = 1.0 / (dp * dp);
  for (int i = 1; i + 1 < n; ++i) out[i] = (row[i - 1] - 2.0 * row[i] + row[i + 1]) * inv;
  out[0] = (row[0] - 2.0 * row[1] + row[2]) * inv;
  out[n - 1] = (row[n - 3] - 2.0 * row[n - 2] + row[n - 1]) * inv;
  row = std::move(out);
}

}  // namespace

RadonInverter::RadonInverter(const Sinogram& s, bool smooth) {
  const int n = s.grid.n;
  if (n % 2 == 0) {
    throw UnsupportedDimensionError(
        "radon inversion: even dimensions need the principal-value branch, which is not provided");
  }
  if (n < 3) throw UnsupportedDimensionError("radon inversion: dimension must be >= 3");
  if (s.p_count < 5) throw InvalidInputError("radon inversion: p grid too coarse for the stencil");

  grid_ = s.grid;
  p_min_ = s.p_min;
  dp_ = s.dp();
  p_count_ = s.p_count;
  constant_ = 0.5 / std::pow(2.0 * kPi, n - 1);
  if (((n - 1) / 2) % 2 == 1) constant_ = -constant_;

  deriv_ = s.values;
  const int passes = (n - 1) / 2;
  std::vector<double> row(p_count_);
  for (std::size_t d = 0; d < grid_.size(); ++d) {
    double* base = deriv_.data() + d * static_cast<std::size_t>(p_count_);
    std::copy(base, base + p_count_, row.begin());
    if (smooth) {
      std::vector<double> sm(row);
      for (int i = 1; i + 1 < p_count_; ++i) sm[i] = 0.25 * row[i - 1] + 0.5 * row[i] + 0.25 * row[i + 1];
      row = std::move(sm);
    }
    for (int pass = 0; pass < passes; ++pass) second_difference(row, dp_);
    std::copy(row.begin(), row.end(), base);
  }
}

double RadonInverter::at(const Vec& x) const {
  if (x.size() != grid_.n) throw InvalidInputError("radon inversion: point dimension mismatch");
  double acc = 0.0;
  for (std::size_t d = 0; d < grid_.size(); ++d) {
    const double p = grid_.dirs[d].dot(x);
    const double u = (p - p_min_) / dp_;
    if (u < 0.0 || u > p_count_ - 1) continue;
    int j = static_cast<int>(std::floor(u));
    j = std::clamp(j, 0, p_count_ - 2);
    const double t = u - j;
    const double* row = deriv_.data() + d * static_cast<std::size_t>(p_count_);
    acc += grid_.weights[d] * ((1.0 - t) * row[j] + t * row[j + 1]);
  }
  return constant_ * acc;
}

double radon_invert_odd(const Sinogram& s, const Vec& x) { return RadonInverter(s).at(x); }

}  // namespace trt::xforms
