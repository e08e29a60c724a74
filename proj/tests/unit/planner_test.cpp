#include <gtest/gtest.h>

#include <random>

#include "atrapos/calibration.hpp"
#include "atrapos/error.hpp"
#include "atrapos/planner.hpp"

namespace atrapos {
namespace {

ChainSpec three_matrix_chain() {
  ChainSpec c;
  c.items = {{4, 5, 0.4}, {5, 5, 0.6}, {5, 3, 0.5}};
  return c;
}

ChainSpec random_chain(std::mt19937_64& rng, std::size_t len) {
  std::uniform_int_distribution<std::size_t> dim(1, 64);
  std::uniform_real_distribution<double> rho(0.0, 1.0);
  ChainSpec c;
  std::size_t rows = dim(rng);
  for (std::size_t k = 0; k < len; ++k) {
    const std::size_t cols = dim(rng);
    c.items.push_back({rows, cols, rho(rng)});
    rows = cols;
  }
  return c;
}

TEST(PlanChain, DenseCountPicksRightAssociation) {
  const Plan plan = plan_chain(three_matrix_chain(), standard_cost_fn());
  EXPECT_EQ(plan.estimated_cost, 135.0);
  EXPECT_EQ(plan.table.split(0, 2), 0u);
  EXPECT_EQ(plan.to_string(), "(A1·(A2·A3))");
  EXPECT_EQ(plan.table.cost(0, 1) + 4 * 5 * 3, 160.0);
  const auto brute = brute_force_plan(three_matrix_chain(), standard_cost_fn());
  EXPECT_EQ(brute.plan.estimated_cost, 135.0);
  EXPECT_EQ(brute.plans_enumerated, 2u);
}

TEST(PlanChain, SingleItemIsALeaf) {
  ChainSpec c;
  c.items = {{3, 4, 0.5}};
  const Plan plan = plan_chain(c, CostCoefficients{1, 1, 1});
  ASSERT_EQ(plan.nodes.size(), 1u);
  EXPECT_EQ(plan.root().kind, PlanNodeKind::Leaf);
  EXPECT_EQ(plan.estimated_cost, 0.0);
}

TEST(PlanChain, RejectsIncompatibleChains) {
  ChainSpec c;
  c.items = {{3, 4, 0.5}, {5, 2, 0.5}};
  EXPECT_THROW(plan_chain(c, CostCoefficients{1, 1, 1}), DimensionMismatch);
  ChainSpec empty;
  EXPECT_THROW(plan_chain(empty, CostCoefficients{1, 1, 1}), Error);
}

TEST(PlanChain, TableInvariants) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const ChainSpec c = random_chain(rng, 6);
    const Plan plan = plan_chain(c, CostCoefficients{0.3, 0.2, 0.1});
    for (std::size_t i = 0; i < 6; ++i) {
      EXPECT_EQ(plan.table.cost(i, i), 0.0);
      EXPECT_EQ(plan.table.density(i, i), c.items[i].density);
      for (std::size_t j = i + 1; j < 6; ++j) {
        const double d = plan.table.density(i, j);
        EXPECT_GE(d, 0.0);
        EXPECT_LE(d, 1.0);
        EXPECT_EQ(d, estimate_density(plan.table.density(i, j - 1),
                                      c.items[j].density, c.items[j].rows));
      }
    }
  }
}

TEST(BruteForce, CatalanCounts) {
  EXPECT_EQ(catalan(0), 1u);
  EXPECT_EQ(catalan(4), 14u);
  EXPECT_EQ(catalan(10), 16796u);
  std::mt19937_64 rng(8);
  const ChainSpec two = random_chain(rng, 2);
  EXPECT_EQ(brute_force_plan(two, CostCoefficients{1, 1, 1}).plans_enumerated,
            1u);
  const ChainSpec five = random_chain(rng, 5);
  const auto brute = brute_force_plan(five, CostCoefficients{1, 2, 3});
  EXPECT_EQ(brute.plans_enumerated, 14u);
  EXPECT_EQ(brute.plan.estimated_cost,
            plan_chain(five, CostCoefficients{1, 2, 3}).estimated_cost);
  EXPECT_THROW(brute_force_plan(random_chain(rng, 13), CostCoefficients{}),
               Error);
}

TEST(BruteForce, AgreesWithDynamicProgramUnderHints) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> status(0, 5);
  for (int trial = 0; trial < 200; ++trial) {
    const ChainSpec c = random_chain(rng, 2 + trial % 5);
    const std::size_t p = c.items.size();
    std::vector<SpanCostHint> table(p * p);
    for (auto& h : table) {
      const int s = status(rng);
      if (s == 0) h = SpanCostHint::cached(u(rng), u(rng));
      if (s == 1) h = SpanCostHint::known(1000 * u(rng), u(rng));
    }
    HintFn hints = [&](Span s) { return table[s.first * p + s.last]; };
    const CostCoefficients k{u(rng), u(rng), u(rng)};
    const Plan dp = plan_chain(c, k, hints);
    const auto brute = brute_force_plan(c, k, hints);
    EXPECT_EQ(dp.estimated_cost, brute.plan.estimated_cost);
    for (const auto& n : dp.nodes) {
      const auto st = n.span.first == n.span.last
                          ? HintStatus::Unknown
                          : table[n.span.first * p + n.span.last].status;
      EXPECT_EQ(n.kind == PlanNodeKind::FetchCached, st == HintStatus::Cached);
    }
  }
}

TEST(PlanChain, FreeCachedSpanNeverRaisesCost) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const ChainSpec c = random_chain(rng, 5);
    const Plan base = plan_chain(c, CostCoefficients{1, 1, 1});
    std::uniform_int_distribution<std::size_t> pos(0, 4);
    std::size_t a = pos(rng), b = pos(rng);
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    const double d = base.table.density(a, b);
    const Plan hinted = plan_chain(c, CostCoefficients{1, 1, 1}, [&](Span s) {
      return s == Span{a, b} ? SpanCostHint::cached(0.0, d)
                             : SpanCostHint::unknown();
    });
    EXPECT_LE(hinted.estimated_cost, base.estimated_cost);
  }
}

TEST(PlanChain, KnownCostCapsTheSpan) {
  ChainSpec c = three_matrix_chain();
  const Plan plan = plan_chain(c, standard_cost_fn(), [](Span s) {
    return s == Span{1, 2} ? SpanCostHint::known(10.0, 0.5)
                           : SpanCostHint::unknown();
  });
  EXPECT_EQ(plan.table.cost(1, 2), 10.0);
  EXPECT_EQ(plan.estimated_cost, 70.0);
  EXPECT_EQ(plan.root().kind, PlanNodeKind::Multiply);
  EXPECT_THROW(plan_chain(c, standard_cost_fn(),
                          [](Span) { return SpanCostHint::known(-1.0, 0.5); }),
               Error);
}

std::vector<MatrixPtr> random_inputs(std::mt19937_64& rng,
                                     const std::vector<std::size_t>& dims) {
  std::vector<MatrixPtr> out;
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
    out.push_back(std::make_shared<const SparseMatrix>(
        random_sparse(dims[k], dims[k + 1], 0.2, rng)));
  }
  return out;
}

TEST(ExecutePlan, EveryShapeGivesTheSameProduct) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const auto inputs = random_inputs(rng, {7, 12, 5, 9, 8});
    ChainSpec c;
    for (const auto& m : inputs) c.items.push_back(m->stats());
    const Plan a = plan_chain(c, CostCoefficients{1, 1, 1});
    const Plan b = plan_chain(c, standard_cost_fn());
    const ExecutionResult ra = execute_plan(a, inputs);
    const ExecutionResult rb = execute_plan(b, inputs);
    SparseMatrix seq = *inputs[0];
    for (std::size_t k = 1; k < inputs.size(); ++k) {
      seq = spgemm(seq, *inputs[k]).product;
    }
    EXPECT_EQ(*ra.result, seq);
    EXPECT_EQ(*rb.result, seq);
    EXPECT_EQ(ra.produced.size(), 3u);
    std::uint64_t ops = 0;
    for (const auto& p : ra.produced) {
      ops += p.ops;
      EXPECT_GE(p.matrix->density(), 0.0);
      EXPECT_LE(p.matrix->density(), 1.0);
      EXPECT_EQ(p.estimated_density,
                a.table.density(p.span.first, p.span.last));
    }
    EXPECT_EQ(ops, ra.op_count);
    EXPECT_EQ(ra.produced.back().cumulative_ops, ra.op_count);
  }
}

TEST(ExecutePlan, LeafAndFetch) {
  std::mt19937_64 rng(32);
  const auto one = random_inputs(rng, {4, 6});
  ChainSpec single;
  single.items = {one[0]->stats()};
  const auto r = execute_plan(plan_chain(single, CostCoefficients{}), one);
  EXPECT_EQ(r.result, one[0]);
  EXPECT_TRUE(r.produced.empty());

  const auto inputs = random_inputs(rng, {4, 6, 5, 3});
  ChainSpec c;
  for (const auto& m : inputs) c.items.push_back(m->stats());
  const auto inner = std::make_shared<const SparseMatrix>(
      spgemm(*inputs[1], *inputs[2]).product);
  const Plan plan = plan_chain(c, CostCoefficients{1, 1, 1}, [&](Span s) {
    return s == Span{1, 2} ? SpanCostHint::cached(0.0, inner->density())
                           : SpanCostHint::unknown();
  });
  EXPECT_EQ(plan.to_string(), "(A1·[A2..A3])");
  const auto served = execute_plan(plan, inputs, [&](Span s) {
    return s == Span{1, 2} ? inner : nullptr;
  });
  EXPECT_EQ(*served.result,
            spgemm(spgemm(*inputs[0], *inputs[1]).product, *inputs[2]).product);
  ASSERT_EQ(served.fetched.size(), 1u);
  EXPECT_EQ(served.produced.size(), 1u);
  EXPECT_THROW(execute_plan(plan, inputs, [](Span) { return nullptr; }),
               FetchError);
  EXPECT_THROW(execute_plan(plan, inputs), FetchError);
  EXPECT_THROW(execute_plan(plan, one), Error);
}

}  // namespace
}  // namespace atrapos
