#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "atrapos/cost_model.hpp"
#include "atrapos/sparse_matrix.hpp"

namespace atrapos {

// 0/1 matrix with exactly round(density * rows * cols) distinct nonzeros at
// uniformly random positions.
SparseMatrix random_sparse(std::size_t rows, std::size_t cols, double density,
                           std::mt19937_64& rng);

// Fastest of `repeats` runs of spgemm(x, y), in microseconds.
double time_spgemm(const SparseMatrix& x, const SparseMatrix& y,
                   std::size_t repeats);

struct CalibrationGrid {
  std::vector<std::size_t> dims{100, 200, 400, 800};
  std::vector<double> densities{0.001, 0.01, 0.05, 0.1};
  std::size_t repetitions = 3;
  std::size_t timing_repeats = 5;
  std::uint64_t seed = 7;
};

// One sample per (dim, density, repetition): random square operands, their
// exact stats, and the measured multiplication time.
std::vector<CostSample> collect_cost_samples(const CalibrationGrid& grid);

void save_coefficients(const std::filesystem::path& path,
                       const CostCoefficients& coeffs);
CostCoefficients load_coefficients(const std::filesystem::path& path);

}  // namespace atrapos
