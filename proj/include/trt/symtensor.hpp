#pragma once

#include <trt/linalg.hpp>

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

namespace trt::symtensor {

inline constexpr int kMaxOrder = 8;
inline constexpr int kMaxDim = 8;

/// Number of independent components of a symmetric tensor of the given order
/// over R^dim: C(order + dim - 1, order). Order 0 gives 1.
std::size_t sym_dim(int order, int dim);

/// Shared index bookkeeping for one (order, dim) pair. Components are stored
/// one per nondecreasing multi-index, enumerated lexicographically; mult[k] is
/// the number of distinct permutations of tuples[k].
struct SymIndexTable {
  int order = 0;
  int dim = 0;
  std::vector<std::array<std::uint8_t, kMaxOrder>> tuples;
  std::vector<double> mult;

  std::size_t size() const { return tuples.size(); }
  /// Position of a multi-index (any order; it is sorted internally).
  std::size_t index_of(std::array<std::uint8_t, kMaxOrder> idx) const;
};

/// Cached table lookup, thread safe.
const SymIndexTable& index_table(int order, int dim);

/// Symmetric tensor in component form. The invariant contraction weighting
/// lives in the index table, not in the coefficients.
struct SymTensor {
  int order = 0;
  int dim = 0;
  std::vector<double> c;

  SymTensor() = default;
  SymTensor(int order_, int dim_);

  std::size_t size() const { return c.size(); }
};

/// theta^{sym order}: rank-one symmetric power. Order 0 is the scalar 1.
SymTensor sym_power(const Vec& theta, int order);

/// Symmetrized outer product of the given factors (order = factors.size()).
/// Equals sym_power when all factors coincide.
SymTensor sym_product(const std::vector<Vec>& factors);

/// Full contraction <a, b>, multiplicity-weighted so that
/// contract(sym_power(u, m), sym_power(v, m)) == dot(u, v)^m exactly.
double contract(const SymTensor& a, const SymTensor& b);

namespace detail {
/// Contraction against an explicit weight vector (one entry per component).
/// contract() calls this with the canonical table weights; the self test
/// fault-injection path calls it with a perturbed copy.
double contract_weighted(const SymTensor& a, const SymTensor& b, const double* weights);
}  // namespace detail

/// One term of the polarization expansion: a nonempty subset of {0..order-1}
/// encoded as a bit mask, with sign (-1)^(order-|J|) folded into coeff = sign/order!.
struct PolarizationTerm {
  std::uint32_t subset = 0;
  int size = 0;
  double coeff = 0.0;
};

/// All 2^order - 1 terms, subsets enumerated in increasing mask order.
std::vector<PolarizationTerm> polarization_plan(int order);

/// <f, theta_1 sym ... sym theta_m> evaluated through symmetric powers of
/// subset sums. Exact up to roundoff for any f and factor count = f.order.
double polarize(const SymTensor& f, const std::vector<Vec>& thetas);

/// Scalar counterpart: recovers the product v_1 * ... * v_m from m-th powers
/// of subset sums.
double polarize_scalar(const std::vector<double>& values);

/// Genericity test for recovery direction sets. For dim 3 this is pairwise
/// linear independence of order+1 unit vectors (smallest singular value of
/// each 3x2 pair above tol). For other dims it is the rank test of the
/// sym_dim x sym_dim matrix of symmetric powers.
bool is_generic(const std::vector<Vec>& dirs, int order, double tol = 1e-6);

/// Smallest pairwise singular value over all pairs (the margin used by
/// is_generic in dim 3). Returns 0 for fewer than two vectors.
double pair_independence_margin(const std::vector<Vec>& dirs);

/// Recovery basis built from order+1 unit directions in R^3. Columns are the
/// frame power tensors alpha^i sym beta^(m-i) of direction j, enumerated with
/// i ascending and, within each i, j = 1..i+1. labels[k] carries (i, j).
struct BasisSystem {
  int order = 0;
  std::vector<Vec> directions;
  std::vector<SymTensor> columns;
  std::vector<std::pair<int, int>> labels;
  Mat matrix;          // vectorized columns, sym_dim x sym_dim
  double determinant = 0.0;
  Eigen::PartialPivLU<Mat> lu;
};

/// Builds the basis system; throws DegenerateSystemError when the directions
/// fail is_generic at tol or the assembled matrix is singular.
BasisSystem basis_system(const std::vector<Vec>& xi, int order, double tol = 1e-6);

/// Expansion coefficients of theta^{sym m} on the basis columns, solved by LU.
/// Throws DegenerateSystemError when the back-substituted residual exceeds
/// residual_tol relative to the right-hand side.
Eigen::VectorXd cramer_coefficients(const BasisSystem& sys, const Vec& theta,
                                    double residual_tol = 1e-10);

struct VectorSolve {
  Eigen::VectorXd coeffs;
  double determinant = 0.0;
};

/// Solves [columns] c = rhs for square column sets (the frame recombination
/// step of the vector transform). Throws on singular systems.
VectorSolve vector_cramer(const std::vector<Vec>& columns, const Vec& rhs);

}  // namespace trt::symtensor
