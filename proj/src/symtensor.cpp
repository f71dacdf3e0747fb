#include <trt/symtensor.hpp>

#include <trt/errors.hpp>
#include <trt/geometry.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>

namespace trt::symtensor {

namespace {

void check_shape(int order, int dim) {
  if (order < 0 || order > kMaxOrder) {
    throw InvalidInputError("symtensor: order out of range");
  }
  if (dim < 1 || dim > kMaxDim) {
    throw InvalidInputError("symtensor: dim out of range");
  }
}

double factorial(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

SymIndexTable build_table(int order, int dim) {
  SymIndexTable t;
  t.order = order;
  t.dim = dim;

  // Enumerate nondecreasing tuples in lexicographic order by an odometer
  // that keeps digits sorted after every carry.
  std::array<std::uint8_t, kMaxOrder> cur{};
  const double fact_m = factorial(order);
  while (true) {
    std::array<int, kMaxDim> counts{};
    for (int k = 0; k < order; ++k) counts[cur[k]]++;
    double denom = 1.0;
    for (int v = 0; v < dim; ++v) denom *= factorial(counts[v]);
    t.tuples.push_back(cur);
    t.mult.push_back(fact_m / denom);

    int pos = order - 1;
    while (pos >= 0 && cur[pos] == dim - 1) --pos;
    if (pos < 0) break;
    const auto next = static_cast<std::uint8_t>(cur[pos] + 1);
    for (int k = pos; k < order; ++k) cur[k] = next;
  }
  return t;
}

}  // namespace

std::size_t sym_dim(int order, int dim) {
  check_shape(order, dim);
  // C(order + dim - 1, order) built multiplicatively; exact for every
  // (order, dim) admitted by check_shape.
  double v = 1.0;
  for (int k = 1; k <= order; ++k) v = v * (dim - 1 + k) / k;
  return static_cast<std::size_t>(v + 0.5);
}

std::size_t SymIndexTable::index_of(std::array<std::uint8_t, kMaxOrder> idx) const {
  std::sort(idx.begin(), idx.begin() + order);
  for (int k = order; k < kMaxOrder; ++k) idx[k] = 0;
  const auto it = std::lower_bound(tuples.begin(), tuples.end(), idx);
  if (it == tuples.end() || *it != idx) {
    throw InvalidInputError("symtensor: multi-index outside table");
  }
  return static_cast<std::size_t>(it - tuples.begin());
}

const SymIndexTable& index_table(int order, int dim) {
  check_shape(order, dim);
  static std::mutex mu;
  static std::map<std::pair<int, int>, SymIndexTable> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto [it, inserted] = cache.try_emplace({order, dim});
  if (inserted) it->second = build_table(order, dim);
  return it->second;
}

SymTensor::SymTensor(int order_, int dim_)
    : order(order_), dim(dim_), c(index_table(order_, dim_).size(), 0.0) {}

SymTensor sym_power(const Vec& theta, int order) {
  const int dim = static_cast<int>(theta.size());
  SymTensor out(order, dim);
  const auto& table = index_table(order, dim);
  for (std::size_t k = 0; k < table.size(); ++k) {
    double v = 1.0;
    for (int p = 0; p < order; ++p) v *= theta[table.tuples[k][p]];
    out.c[k] = v;
  }
  return out;
}

SymTensor sym_product(const std::vector<Vec>& factors) {
  const int order = static_cast<int>(factors.size());
  if (order == 0 || order > kMaxOrder) {
    throw InvalidInputError("sym_product: factor count out of range");
  }
  const auto dim = factors[0].size();
  for (const auto& f : factors) {
    if (f.size() != dim) throw InvalidInputError("sym_product: mixed dimensions");
  }

  SymTensor out(order, static_cast<int>(dim));
  const auto& table = index_table(order, static_cast<int>(dim));
  std::array<int, kMaxOrder> perm{};
  std::iota(perm.begin(), perm.begin() + order, 0);
  const double inv_fact = 1.0 / factorial(order);

  // Direct symmetrization over all order! slot assignments. Orders are small
  // everywhere this runs, so the loop stays cheap.
  do {
    for (std::size_t k = 0; k < table.size(); ++k) {
      double v = 1.0;
      for (int p = 0; p < order; ++p) v *= factors[perm[p]][table.tuples[k][p]];
      out.c[k] += v;
    }
  } while (std::next_permutation(perm.begin(), perm.begin() + order));

  for (double& v : out.c) v *= inv_fact;
  return out;
}

namespace detail {
double contract_weighted(const SymTensor& a, const SymTensor& b, const double* weights) {
  if (a.order != b.order || a.dim != b.dim) {
    throw InvalidInputError("contract: shape mismatch");
  }
  double acc = 0.0;
  for (std::size_t k = 0; k < a.c.size(); ++k) acc += weights[k] * a.c[k] * b.c[k];
  return acc;
}
}  // namespace detail

double contract(const SymTensor& a, const SymTensor& b) {
  const auto& table = index_table(a.order, a.dim);
  return detail::contract_weighted(a, b, table.mult.data());
}

std::vector<PolarizationTerm> polarization_plan(int order) {
  if (order < 1 || order > kMaxOrder) {
    throw InvalidInputError("polarization_plan: order out of range");
  }
  const double inv_fact = 1.0 / factorial(order);
  std::vector<PolarizationTerm> plan;
  plan.reserve((std::size_t{1} << order) - 1);
  for (std::uint32_t mask = 1; mask < (1u << order); ++mask) {
    PolarizationTerm term;
    term.subset = mask;
    term.size = __builtin_popcount(mask);
    const int sign = ((order - term.size) % 2 == 0) ? 1 : -1;
    term.coeff = sign * inv_fact;
    plan.push_back(term);
  }
  return plan;
}

double polarize(const SymTensor& f, const std::vector<Vec>& thetas) {
  if (static_cast<int>(thetas.size()) != f.order) {
    throw InvalidInputError("polarize: factor count must equal tensor order");
  }
  double acc = 0.0;
  for (const auto& term : polarization_plan(f.order)) {
    Vec sum = Vec::Zero(f.dim);
    for (int j = 0; j < f.order; ++j) {
      if (term.subset & (1u << j)) sum += thetas[j];
    }
    acc += term.coeff * contract(f, sym_power(sum, f.order));
  }
  return acc;
}

double polarize_scalar(const std::vector<double>& values) {
  const int order = static_cast<int>(values.size());
  double acc = 0.0;
  for (const auto& term : polarization_plan(order)) {
    double sum = 0.0;
    for (int j = 0; j < order; ++j) {
      if (term.subset & (1u << j)) sum += values[j];
    }
    double p = 1.0;
    for (int k = 0; k < order; ++k) p *= sum;
    acc += term.coeff * p;
  }
  return acc;
}

double pair_independence_margin(const std::vector<Vec>& dirs) {
  if (dirs.size() < 2) return 0.0;
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a + 1 < dirs.size(); ++a) {
    for (std::size_t b = a + 1; b < dirs.size(); ++b) {
      Mat pair(dirs[a].size(), 2);
      pair.col(0) = dirs[a].normalized();
      pair.col(1) = dirs[b].normalized();
      Eigen::JacobiSVD<Mat> svd(pair);
      margin = std::min(margin, svd.singularValues().minCoeff());
    }
  }
  return margin;
}

bool is_generic(const std::vector<Vec>& dirs, int order, double tol) {
  if (dirs.empty()) throw InvalidInputError("is_generic: empty direction list");
  const int dim = static_cast<int>(dirs[0].size());
  if (dim == 3) {
    if (static_cast<int>(dirs.size()) != order + 1) return false;
    // A single direction (order 0) has no pair condition to violate.
    if (dirs.size() < 2) return true;
    return pair_independence_margin(dirs) > tol;
  }
  // General-dim criterion: the symmetric powers of the directions must be
  // linearly independent as vectors in the weighted component space.
  const std::size_t nrows = sym_dim(order, dim);
  if (dirs.size() > nrows) return false;
  const auto& table = index_table(order, dim);
  Mat powers(static_cast<Eigen::Index>(nrows), static_cast<Eigen::Index>(dirs.size()));
  for (std::size_t j = 0; j < dirs.size(); ++j) {
    const SymTensor p = sym_power(dirs[j].normalized(), order);
    for (std::size_t k = 0; k < nrows; ++k) {
      powers(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) =
          std::sqrt(table.mult[k]) * p.c[k];
    }
  }
  Eigen::JacobiSVD<Mat> svd(powers);
  return svd.singularValues().minCoeff() > tol;
}

BasisSystem basis_system(const std::vector<Vec>& xi, int order, double tol) {
  if (static_cast<int>(xi.size()) != order + 1) {
    throw InvalidInputError("basis_system: need order + 1 directions");
  }
  if (xi[0].size() != 3) {
    throw InvalidInputError("basis_system: directions must live in R^3");
  }
  if (!is_generic(xi, order, tol)) {
    // Report the closest pair so callers can see which inputs collided.
    int worst_a = 0, worst_b = 1;
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a + 1 < xi.size(); ++a) {
      for (std::size_t b = a + 1; b < xi.size(); ++b) {
        const double m = pair_independence_margin({xi[a], xi[b]});
        if (m < worst) { worst = m; worst_a = static_cast<int>(a); worst_b = static_cast<int>(b); }
      }
    }
    throw DegenerateSystemError("basis_system: directions are not pairwise independent",
                                worst_a, worst_b);
  }

  BasisSystem sys;
  sys.order = order;
  sys.directions.reserve(xi.size());
  for (const auto& d : xi) sys.directions.push_back(d.normalized());

  const auto n = static_cast<Eigen::Index>(sym_dim(order, 3));
  sys.matrix = Mat(n, n);
  for (int i = 0; i <= order; ++i) {
    for (int j = 1; j <= i + 1; ++j) {
      const geometry::Frame frame = geometry::frame_of_direction(sys.directions[j - 1]);
      SymTensor col(order, 3);
      if (order == 0) {
        col.c[0] = 1.0;
      } else {
        std::vector<Vec> factors;
        factors.reserve(order);
        for (int k = 0; k < i; ++k) factors.push_back(frame.eta[0]);
        for (int k = 0; k < order - i; ++k) factors.push_back(frame.eta[1]);
        col = sym_product(factors);
      }
      const auto col_idx = static_cast<Eigen::Index>(sys.columns.size());
      for (Eigen::Index r = 0; r < n; ++r) sys.matrix(r, col_idx) = col.c[static_cast<std::size_t>(r)];
      sys.columns.push_back(std::move(col));
      sys.labels.emplace_back(i, j);
    }
  }

  Eigen::JacobiSVD<Mat> svd(sys.matrix);
  const auto& sv = svd.singularValues();
  if (!(sv.minCoeff() > 1e-12 * sv.maxCoeff())) {
    throw DegenerateSystemError("basis_system: frame power matrix is singular");
  }
  sys.lu.compute(sys.matrix);
  sys.determinant = sys.lu.determinant();
  return sys;
}

Eigen::VectorXd cramer_coefficients(const BasisSystem& sys, const Vec& theta,
                                    double residual_tol) {
  const SymTensor rhs_tensor = sym_power(theta, sys.order);
  const Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(
      rhs_tensor.c.data(), static_cast<Eigen::Index>(rhs_tensor.c.size()));
  Eigen::VectorXd x = sys.lu.solve(rhs);
  // One refinement step keeps the residual near rounding even when the
  // direction tuple sits close to the independence margin.
  x += sys.lu.solve(rhs - sys.matrix * x);
  const double residual = (sys.matrix * x - rhs).norm();
  if (!(residual <= residual_tol * std::max(1.0, rhs.norm()))) {
    throw DegenerateSystemError("cramer_coefficients: solve residual above tolerance");
  }
  return x;
}

VectorSolve vector_cramer(const std::vector<Vec>& columns, const Vec& rhs) {
  const auto n = static_cast<Eigen::Index>(rhs.size());
  if (static_cast<Eigen::Index>(columns.size()) != n) {
    throw InvalidInputError("vector_cramer: system must be square");
  }
  Mat m(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    if (columns[j].size() != n) throw InvalidInputError("vector_cramer: column size mismatch");
    m.col(j) = columns[j];
  }
  Eigen::FullPivLU<Mat> lu(m);
  VectorSolve out;
  out.determinant = lu.determinant();
  if (!lu.isInvertible()) {
    throw DegenerateSystemError("vector_cramer: singular system");
  }
  out.coeffs = lu.solve(Eigen::VectorXd(rhs));
  return out;
}

}  // namespace trt::symtensor
