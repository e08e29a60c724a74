#include "atrapos/cost_model.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "atrapos/error.hpp"

namespace atrapos {

double estimate_density(double rho_x, double rho_y, std::size_t inner) {
  const double p = std::clamp(rho_x * rho_y, 0.0, 1.0);
  if (p == 0.0 || inner == 0) return 0.0;
  if (p == 1.0) return 1.0;
  // 1 - (1 - p)^n evaluated without cancellation for tiny p.
  const double z = -std::expm1(static_cast<double>(inner) * std::log1p(-p));
  return std::clamp(z, 0.0, 1.0);
}

CostTerms cost_terms(const MatrixStats& x, const MatrixStats& y) {
  if (x.cols != y.rows) {
    throw DimensionMismatch("cost model: inner dimensions " +
                            std::to_string(x.cols) + " and " +
                            std::to_string(y.rows) + " differ");
  }
  const double m = static_cast<double>(x.rows);
  const double n = static_cast<double>(x.cols);
  const double l = static_cast<double>(y.cols);
  const double rho_z = estimate_density(x.density, y.density, x.cols);
  CostTerms t;
  t.left_nonzeros = m * n * x.density;
  t.operations = m * n * x.density * l * y.density;
  t.result_nonzeros = m * l * rho_z;
  return t;
}

PairCost estimate_cost(const MatrixStats& x, const MatrixStats& y,
                       const CostCoefficients& coeffs) {
  const CostTerms t = cost_terms(x, y);
  PairCost out;
  out.cost = coeffs.alpha * t.left_nonzeros + coeffs.beta * t.operations +
             coeffs.gamma * t.result_nonzeros;
  out.result = MatrixStats{x.rows, y.cols,
                           estimate_density(x.density, y.density, x.cols)};
  return out;
}

std::uint64_t standard_cost(const MatrixStats& x, const MatrixStats& y) {
  if (x.cols != y.rows) {
    throw DimensionMismatch("standard cost: inner dimensions differ");
  }
  return static_cast<std::uint64_t>(x.rows) * x.cols * y.cols;
}

PairCostFn sparse_cost_fn(const CostCoefficients& coeffs) {
  return [coeffs](const MatrixStats& x, const MatrixStats& y) {
    return estimate_cost(x, y, coeffs);
  };
}

PairCostFn standard_cost_fn() {
  return [](const MatrixStats& x, const MatrixStats& y) {
    PairCost out;
    out.cost = static_cast<double>(standard_cost(x, y));
    out.result = MatrixStats{x.rows, y.cols,
                             estimate_density(x.density, y.density, x.cols)};
    return out;
  };
}

CostCoefficients fit_cost_model(std::span<const CostSample> samples) {
  if (samples.size() < 3) {
    throw Error("cost model fit needs at least three samples");
  }
  const auto rows = static_cast<Eigen::Index>(samples.size());
  Eigen::MatrixXd design(rows, 3);
  Eigen::VectorXd target(rows);
  // Rows are weighted by 1/measured, so the fit minimizes relative error.
  // Timings span several orders of magnitude and their noise is roughly
  // proportional to the value.
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& s = samples[static_cast<std::size_t>(i)];
    const CostTerms t = cost_terms(s.x, s.y);
    const double w = s.measured > 0.0 ? 1.0 / s.measured : 1.0;
    design(i, 0) = w * t.left_nonzeros;
    design(i, 1) = w * t.operations;
    design(i, 2) = w * t.result_nonzeros;
    target(i) = w * s.measured;
  }

  // Columns are normalized before factorization; the regressors span many
  // orders of magnitude.
  Eigen::Vector3d scale;
  for (int c = 0; c < 3; ++c) {
    scale(c) = design.col(c).norm();
    if (scale(c) == 0.0) {
      throw Error("cost model fit: term " + std::to_string(c) +
                  " is zero on every sample (rank deficient)");
    }
  }
  const Eigen::MatrixXd normalized = design * scale.cwiseInverse().asDiagonal();
  {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(normalized);
    if (qr.rank() < 3) {
      throw Error("cost model fit: sample terms are rank deficient");
    }
  }

  std::vector<int> active = {0, 1, 2};
  Eigen::Vector3d coeff = Eigen::Vector3d::Zero();
  while (!active.empty()) {
    Eigen::MatrixXd sub(rows, static_cast<Eigen::Index>(active.size()));
    for (std::size_t k = 0; k < active.size(); ++k) {
      sub.col(static_cast<Eigen::Index>(k)) = normalized.col(active[k]);
    }
    const Eigen::VectorXd sol = sub.colPivHouseholderQr().solve(target);
    int worst = -1;
    double worst_value = 0.0;
    for (std::size_t k = 0; k < active.size(); ++k) {
      const double v = sol(static_cast<Eigen::Index>(k));
      if (v < worst_value) {
        worst_value = v;
        worst = static_cast<int>(k);
      }
    }
    if (worst < 0) {
      coeff.setZero();
      for (std::size_t k = 0; k < active.size(); ++k) {
        coeff(active[k]) = sol(static_cast<Eigen::Index>(k)) / scale(active[k]);
      }
      break;
    }
    active.erase(active.begin() + worst);
  }
  return CostCoefficients{coeff(0), coeff(1), coeff(2)};
}

}  // namespace atrapos
