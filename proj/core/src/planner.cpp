#include "atrapos/planner.hpp"

#include <chrono>
#include <limits>
#include <string>

#include "atrapos/error.hpp"

namespace atrapos {

namespace {

constexpr std::size_t kBruteForceLimit = 12;

void check_chain(const std::vector<MatrixStats>& items) {
  if (items.empty()) throw Error("empty multiplication chain");
  for (std::size_t k = 0; k + 1 < items.size(); ++k) {
    if (items[k].cols != items[k + 1].rows) {
      throw DimensionMismatch("chain items " + std::to_string(k) + " and " +
                              std::to_string(k + 1) + " are incompatible");
    }
  }
}

// Hints for every span of length >= 2, queried once each.
std::vector<SpanCostHint> collect_hints(std::size_t p, const HintFn& hints) {
  std::vector<SpanCostHint> out(p * p);
  if (!hints) return out;
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i + 1; j < p; ++j) {
      SpanCostHint h = hints(Span{i, j});
      if (h.status != HintStatus::Unknown &&
          (!(h.cost >= 0.0) || !(h.density >= 0.0) || h.density > 1.0)) {
        throw Error("span hint out of range");
      }
      out[i * p + j] = h;
    }
  }
  return out;
}

std::vector<double> span_densities(const std::vector<MatrixStats>& items,
                                   const std::vector<SpanCostHint>& hints) {
  const std::size_t p = items.size();
  std::vector<double> d(p * p, 0.0);
  for (std::size_t i = 0; i < p; ++i) {
    d[i * p + i] = items[i].density;
    for (std::size_t j = i + 1; j < p; ++j) {
      const auto& h = hints[i * p + j];
      d[i * p + j] = h.status == HintStatus::Unknown
                         ? estimate_density(d[i * p + j - 1], items[j].density,
                                            items[j].rows)
                         : h.density;
    }
  }
  return d;
}

MatrixStats span_stats(const std::vector<MatrixStats>& items,
                       const std::vector<double>& d, std::size_t i,
                       std::size_t j) {
  return MatrixStats{items[i].rows, items[j].cols, d[i * items.size() + j]};
}

std::string default_label(Span s) {
  if (s.first == s.last) return "A" + std::to_string(s.first + 1);
  return "A" + std::to_string(s.first + 1) + ".." + "A" +
         std::to_string(s.last + 1);
}

}  // namespace

std::string Plan::to_string(
    const std::function<std::string(Span)>& label) const {
  if (nodes.empty()) return "";
  auto name = [&](Span s) { return label ? label(s) : default_label(s); };
  std::vector<std::string> text(nodes.size());
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    const PlanNode& node = nodes[n];
    switch (node.kind) {
      case PlanNodeKind::Leaf:
        text[n] = name(node.span);
        break;
      case PlanNodeKind::FetchCached:
        text[n] = "[" + name(node.span) + "]";
        break;
      case PlanNodeKind::Multiply:
        text[n] = "(" + text[static_cast<std::size_t>(node.left)] + "·" +
                  text[static_cast<std::size_t>(node.right)] + ")";
        break;
    }
  }
  return text.back();
}

Plan plan_chain(const ChainSpec& chain, const PairCostFn& pair_cost,
                const HintFn& hints) {
  check_chain(chain.items);
  const auto& items = chain.items;
  const std::size_t p = items.size();
  const auto hint = collect_hints(p, hints);
  const auto d = span_densities(items, hint);

  Plan plan;
  plan.items = items;
  plan.table = PlanTable(p);
  PlanTable& t = plan.table;
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i; j < p; ++j) t.density(i, j) = d[i * p + j];
    t.split(i, i) = i;
  }

  for (std::size_t len = 2; len <= p; ++len) {
    for (std::size_t i = 0; i + len <= p; ++i) {
      const std::size_t j = i + len - 1;
      const auto& h = hint[i * p + j];
      t.split(i, j) = i;
      if (h.status == HintStatus::Cached) {
        t.cost(i, j) = h.cost;
        continue;
      }
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t k = i; k < j; ++k) {
        const double c = t.cost(i, k) + t.cost(k + 1, j) +
                         pair_cost(span_stats(items, d, i, k),
                                   span_stats(items, d, k + 1, j))
                             .cost;
        if (c < best) {
          best = c;
          t.split(i, j) = k;
        }
      }
      if (h.status == HintStatus::Known && h.cost < best) best = h.cost;
      t.cost(i, j) = best;
    }
  }

  // Emit nodes children-first.
  std::function<int(std::size_t, std::size_t)> emit = [&](std::size_t i,
                                                         std::size_t j) {
    PlanNode node;
    node.span = Span{i, j};
    node.estimated_density = t.density(i, j);
    if (i == j) {
      node.kind = PlanNodeKind::Leaf;
    } else if (hint[i * p + j].status == HintStatus::Cached) {
      node.kind = PlanNodeKind::FetchCached;
    } else {
      node.kind = PlanNodeKind::Multiply;
      node.left = emit(i, t.split(i, j));
      node.right = emit(t.split(i, j) + 1, j);
    }
    plan.nodes.push_back(node);
    return static_cast<int>(plan.nodes.size() - 1);
  };
  emit(0, p - 1);
  plan.estimated_cost = t.cost(0, p - 1);
  return plan;
}

Plan plan_chain(const ChainSpec& chain, const CostCoefficients& coeffs,
                const HintFn& hints) {
  return plan_chain(chain, sparse_cost_fn(coeffs), hints);
}

std::uint64_t catalan(std::size_t n) {
  std::uint64_t c = 1;
  for (std::size_t k = 0; k < n; ++k) {
    c = c * 2 * (2 * k + 1) / (k + 2);
  }
  return c;
}

namespace {

// A parenthesization encoded as the preorder list of split points of its
// multiply nodes. Fetched spans contribute nothing.
using Encoding = std::vector<std::size_t>;

struct Enumerator {
  std::size_t p;
  const std::vector<SpanCostHint>& hint;

  std::vector<Encoding> all(std::size_t i, std::size_t j) const {
    if (i == j || hint[i * p + j].status == HintStatus::Cached) return {{}};
    std::vector<Encoding> out;
    for (std::size_t k = i; k < j; ++k) {
      const auto lefts = all(i, k);
      const auto rights = all(k + 1, j);
      for (const auto& l : lefts) {
        for (const auto& r : rights) {
          Encoding e;
          e.reserve(1 + l.size() + r.size());
          e.push_back(k);
          e.insert(e.end(), l.begin(), l.end());
          e.insert(e.end(), r.begin(), r.end());
          out.push_back(std::move(e));
        }
      }
    }
    return out;
  }
};

struct Pricer {
  const std::vector<MatrixStats>& items;
  const std::vector<SpanCostHint>& hint;
  const std::vector<double>& d;
  const PairCostFn& pair_cost;
  const Encoding& e;
  std::size_t pos = 0;

  double price(std::size_t i, std::size_t j) {
    const std::size_t p = items.size();
    if (i == j) return 0.0;
    const auto& h = hint[i * p + j];
    if (h.status == HintStatus::Cached) return h.cost;
    const std::size_t k = e[pos++];
    const double left = price(i, k);
    const double right = price(k + 1, j);
    double c = left + right +
               pair_cost(span_stats(items, d, i, k),
                         span_stats(items, d, k + 1, j))
                   .cost;
    if (h.status == HintStatus::Known && h.cost < c) c = h.cost;
    return c;
  }

  int build(Plan& plan, std::size_t i, std::size_t j) {
    const std::size_t p = items.size();
    PlanNode node;
    node.span = Span{i, j};
    node.estimated_density = d[i * p + j];
    if (i == j) {
      node.kind = PlanNodeKind::Leaf;
    } else if (hint[i * p + j].status == HintStatus::Cached) {
      node.kind = PlanNodeKind::FetchCached;
    } else {
      const std::size_t k = e[pos++];
      node.kind = PlanNodeKind::Multiply;
      node.left = build(plan, i, k);
      node.right = build(plan, k + 1, j);
    }
    plan.nodes.push_back(node);
    return static_cast<int>(plan.nodes.size() - 1);
  }
};

}  // namespace

BruteForceResult brute_force_plan(const ChainSpec& chain,
                                  const PairCostFn& pair_cost,
                                  const HintFn& hints) {
  check_chain(chain.items);
  const auto& items = chain.items;
  const std::size_t p = items.size();
  if (p > kBruteForceLimit) {
    throw Error("brute force planning is limited to chains of length " +
                std::to_string(kBruteForceLimit));
  }
  const auto hint = collect_hints(p, hints);
  const auto d = span_densities(items, hint);
  const auto encodings = Enumerator{p, hint}.all(0, p - 1);

  std::size_t best = 0;
  double best_cost = std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < encodings.size(); ++n) {
    Pricer pricer{items, hint, d, pair_cost, encodings[n]};
    const double c = pricer.price(0, p - 1);
    if (c < best_cost) {
      best_cost = c;
      best = n;
    }
  }

  BruteForceResult out;
  out.plans_enumerated = encodings.size();
  out.plan.items = items;
  out.plan.estimated_cost = best_cost;
  Pricer builder{items, hint, d, pair_cost, encodings[best]};
  builder.build(out.plan, 0, p - 1);
  return out;
}

BruteForceResult brute_force_plan(const ChainSpec& chain,
                                  const CostCoefficients& coeffs,
                                  const HintFn& hints) {
  return brute_force_plan(chain, sparse_cost_fn(coeffs), hints);
}

ExecutionResult execute_plan(const Plan& plan,
                             const std::vector<MatrixPtr>& inputs,
                             const FetchFn& fetch) {
  if (inputs.size() != plan.chain_length()) {
    throw Error("plan expects " + std::to_string(plan.chain_length()) +
                " inputs, got " + std::to_string(inputs.size()));
  }
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    if (!inputs[k] || inputs[k]->rows() != plan.items[k].rows ||
        inputs[k]->cols() != plan.items[k].cols) {
      throw DimensionMismatch("input " + std::to_string(k) +
                              " does not match the planned shape");
    }
  }

  using Clock = std::chrono::steady_clock;
  ExecutionResult out;
  std::vector<MatrixPtr> value(plan.nodes.size());
  std::vector<double> cum_micros(plan.nodes.size(), 0.0);
  std::vector<std::uint64_t> cum_ops(plan.nodes.size(), 0);

  for (std::size_t n = 0; n < plan.nodes.size(); ++n) {
    const PlanNode& node = plan.nodes[n];
    switch (node.kind) {
      case PlanNodeKind::Leaf:
        value[n] = inputs[node.span.first];
        break;
      case PlanNodeKind::FetchCached: {
        MatrixPtr m = fetch ? fetch(node.span) : nullptr;
        if (!m) {
          throw FetchError("span " + std::to_string(node.span.first) + ".." +
                           std::to_string(node.span.last) +
                           " is no longer cached");
        }
        if (m->rows() != plan.items[node.span.first].rows ||
            m->cols() != plan.items[node.span.last].cols) {
          throw DimensionMismatch("fetched matrix has the wrong shape");
        }
        value[n] = std::move(m);
        out.fetched.push_back(node.span);
        break;
      }
      case PlanNodeKind::Multiply: {
        const auto l = static_cast<std::size_t>(node.left);
        const auto r = static_cast<std::size_t>(node.right);
        const auto start = Clock::now();
        SpgemmResult z = spgemm(*value[l], *value[r]);
        const double micros =
            std::chrono::duration<double, std::micro>(Clock::now() - start)
                .count();
        value[n] = std::make_shared<const SparseMatrix>(std::move(z.product));
        cum_micros[n] = cum_micros[l] + cum_micros[r] + micros;
        cum_ops[n] = cum_ops[l] + cum_ops[r] + z.op_count;
        out.op_count += z.op_count;
        out.micros += micros;
        out.produced.push_back(ProducedSpan{node.span, static_cast<int>(n),
                                            value[n], micros,
                                            cum_micros[n], z.op_count,
                                            cum_ops[n],
                                            node.estimated_density});
        break;
      }
    }
  }
  out.result = value.back();
  return out;
}

}  // namespace atrapos
