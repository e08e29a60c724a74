#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>

namespace atrapos {

// Shape and density of a (possibly not yet materialized) matrix. This is all
// the planner sees of an operand.
struct MatrixStats {
  std::size_t rows = 1;
  std::size_t cols = 1;
  double density = 0.0;

  double nonzeros() const {
    return static_cast<double>(rows) * static_cast<double>(cols) * density;
  }
  friend bool operator==(const MatrixStats&, const MatrixStats&) = default;
};

// Time per unit of the three terms of the sparse multiplication cost:
// nonzeros of the left operand, estimated scalar operations, and estimated
// nonzeros of the result. Units follow whatever the samples were timed in
// (microseconds throughout this project).
struct CostCoefficients {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;

  friend bool operator==(const CostCoefficients&,
                         const CostCoefficients&) = default;
};

// The three regressors of the sparse cost model for X[m x n] * Y[n x l].
struct CostTerms {
  double left_nonzeros = 0.0;       // m * n * rho_X
  double operations = 0.0;          // m * n * rho_X * l * rho_Y
  double result_nonzeros = 0.0;     // m * l * rho_Z (estimated)
};

struct PairCost {
  double cost = 0.0;
  MatrixStats result;
};

// Average-case density of X * Y assuming uniformly scattered nonzeros:
// 1 - (1 - rho_x * rho_y)^inner.
double estimate_density(double rho_x, double rho_y, std::size_t inner);

CostTerms cost_terms(const MatrixStats& x, const MatrixStats& y);

// alpha * nnz(X) + beta * N_op + gamma * nnz(Z), all estimated from stats.
// Throws DimensionMismatch when x.cols != y.rows.
PairCost estimate_cost(const MatrixStats& x, const MatrixStats& y,
                       const CostCoefficients& coeffs);

// m * n * l, the dense multiplication count.
std::uint64_t standard_cost(const MatrixStats& x, const MatrixStats& y);

// Pricing function for one pairwise multiplication. Both the dynamic
// program and the exhaustive oracle take one of these.
using PairCostFn =
    std::function<PairCost(const MatrixStats&, const MatrixStats&)>;

PairCostFn sparse_cost_fn(const CostCoefficients& coeffs);
// Dense m * n * l pricing; the result density still follows the average-case
// estimator so downstream spans have a defined density.
PairCostFn standard_cost_fn();

struct CostSample {
  MatrixStats x;
  MatrixStats y;
  double measured = 0.0;
};

// Least-squares fit of (alpha, beta, gamma) against the estimated terms of
// each sample. A coefficient that comes out negative is pinned to zero and
// the remaining ones are refit. Throws Error when fewer than three samples
// are given or the term matrix is rank deficient.
CostCoefficients fit_cost_model(std::span<const CostSample> samples);

}  // namespace atrapos
