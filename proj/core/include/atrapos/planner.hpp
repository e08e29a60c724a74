#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "atrapos/cost_model.hpp"
#include "atrapos/sparse_matrix.hpp"

namespace atrapos {

// Inclusive range [first, last] of chain items, 0-based.
struct Span {
  std::size_t first = 0;
  std::size_t last = 0;

  std::size_t size() const { return last - first + 1; }
  friend auto operator<=>(const Span&, const Span&) = default;
};

struct ChainSpec {
  std::vector<MatrixStats> items;
  // Sub-metapath label of a span, used by the pretty printer. Optional.
  std::function<std::string(Span)> span_key;
};

enum class HintStatus { Unknown, Cached, Known };

struct SpanCostHint {
  HintStatus status = HintStatus::Unknown;
  double cost = 0.0;     // retrieval cost (Cached) or recompute cost (Known)
  double density = 0.0;

  static SpanCostHint unknown() { return {}; }
  static SpanCostHint cached(double retrieval, double density) {
    return {HintStatus::Cached, retrieval, density};
  }
  static SpanCostHint known(double recompute, double density) {
    return {HintStatus::Known, recompute, density};
  }
};

using HintFn = std::function<SpanCostHint(Span)>;

// p x p tables, row-major; only i <= j is meaningful.
class PlanTable {
 public:
  PlanTable() = default;
  explicit PlanTable(std::size_t p)
      : p_(p), cost_(p * p, 0.0), density_(p * p, 0.0), split_(p * p, 0) {}

  std::size_t size() const { return p_; }
  double& cost(std::size_t i, std::size_t j) { return cost_[i * p_ + j]; }
  double cost(std::size_t i, std::size_t j) const { return cost_[i * p_ + j]; }
  double& density(std::size_t i, std::size_t j) { return density_[i * p_ + j]; }
  double density(std::size_t i, std::size_t j) const {
    return density_[i * p_ + j];
  }
  std::size_t& split(std::size_t i, std::size_t j) { return split_[i * p_ + j]; }
  std::size_t split(std::size_t i, std::size_t j) const {
    return split_[i * p_ + j];
  }

 private:
  std::size_t p_ = 0;
  std::vector<double> cost_;
  std::vector<double> density_;
  std::vector<std::size_t> split_;
};

enum class PlanNodeKind { Leaf, Multiply, FetchCached };

struct PlanNode {
  PlanNodeKind kind = PlanNodeKind::Leaf;
  Span span;
  int left = -1;
  int right = -1;
  double estimated_density = 0.0;
};

struct Plan {
  std::vector<PlanNode> nodes;  // children precede parents; root is last
  double estimated_cost = 0.0;
  PlanTable table;
  std::vector<MatrixStats> items;

  const PlanNode& root() const { return nodes.back(); }
  std::size_t chain_length() const { return items.size(); }

  // e.g. "((A1·A2)·A3)"; fetched spans print as "[label]".
  std::string to_string(const std::function<std::string(Span)>& label = {}) const;
};

// Dynamic program over split points. The estimated density of a span does not
// depend on how it is parenthesized: it is the left-to-right fold of the
// average-case estimator, overridden by any Cached/Known hint density.
// Cached spans become fetch nodes priced at the hint cost; Known spans keep
// their split but are priced at min(composed cost, recorded cost).
// Equal costs resolve to the smallest split index.
Plan plan_chain(const ChainSpec& chain, const PairCostFn& pair_cost,
                const HintFn& hints = {});
Plan plan_chain(const ChainSpec& chain, const CostCoefficients& coeffs,
                const HintFn& hints = {});

// Exhaustive enumeration of every parenthesization, priced with the same
// span densities and hint rules. Throws Error for chains longer than 12.
struct BruteForceResult {
  Plan plan;
  std::uint64_t plans_enumerated = 0;
};
BruteForceResult brute_force_plan(const ChainSpec& chain,
                                  const PairCostFn& pair_cost,
                                  const HintFn& hints = {});
BruteForceResult brute_force_plan(const ChainSpec& chain,
                                  const CostCoefficients& coeffs,
                                  const HintFn& hints = {});

std::uint64_t catalan(std::size_t n);

using MatrixPtr = std::shared_ptr<const SparseMatrix>;

struct ProducedSpan {
  Span span;
  int node = -1;  // index into Plan::nodes
  MatrixPtr matrix;
  double micros = 0.0;             // this multiplication only
  double cumulative_micros = 0.0;  // every multiplication below, fetches free
  std::uint64_t ops = 0;
  std::uint64_t cumulative_ops = 0;
  double estimated_density = 0.0;
};

struct ExecutionResult {
  MatrixPtr result;
  std::vector<ProducedSpan> produced;  // execution order
  std::vector<Span> fetched;
  std::uint64_t op_count = 0;
  double micros = 0.0;
};

// Returns nullptr when the span cannot be served.
using FetchFn = std::function<MatrixPtr(Span)>;

// Runs the plan bottom-up. Throws FetchError when a fetch node is not served.
ExecutionResult execute_plan(const Plan& plan,
                             const std::vector<MatrixPtr>& inputs,
                             const FetchFn& fetch = {});

}  // namespace atrapos
