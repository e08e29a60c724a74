#include "atrapos/engine.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <map>
#include <set>

#include "atrapos/error.hpp"

namespace atrapos {

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::HRANKS: return "hranks";
    case Variant::CBS1: return "cbs1";
    case Variant::CBS2: return "cbs2";
    case Variant::ATRAPOS: return "atrapos";
  }
  return "?";
}

std::optional<Variant> parse_variant(std::string_view s) {
  std::string lower(s);
  for (auto& ch : lower) ch = static_cast<char>(std::tolower(ch));
  lower.erase(std::remove(lower.begin(), lower.end(), '-'), lower.end());
  if (lower == "hranks") return Variant::HRANKS;
  if (lower == "cbs1") return Variant::CBS1;
  if (lower == "cbs2") return Variant::CBS2;
  if (lower == "atrapos") return Variant::ATRAPOS;
  return std::nullopt;
}

Policy EngineConfig::effective_policy() const {
  if (policy) return *policy;
  return variant == Variant::ATRAPOS ? Policy::OTREE : Policy::LRU;
}

struct Engine::Chain {
  const MetapathQuery* query = nullptr;
  std::string path;
  std::vector<MatrixPtr> inputs;
  ChainSpec spec;
  // Cache key of matrix span [a, b], i.e. node span [a, b + 1].
  std::vector<std::vector<CacheKey>> keys;
  // Constraint keys of node spans, for the overlap tree.
  std::vector<std::vector<ConstraintKey>> node_keys;

  std::size_t length() const { return inputs.size(); }
  const CacheKey& key(Span s) const { return keys[s.first][s.last]; }
  double cells(Span s) const {
    return static_cast<double>(spec.items[s.first].rows) *
           static_cast<double>(spec.items[s.last].cols);
  }
  std::string label(Span s) const {
    if (s.first == s.last) return query->edges[s.first];
    return keys[s.first][s.last].path;
  }
};

Engine::Engine(const Hin& hin, EngineConfig config)
    : hin_(hin), config_(std::move(config)) {
  const Policy policy = config_.effective_policy();
  switch (config_.variant) {
    case Variant::HRANKS:
      break;
    case Variant::CBS1:
    case Variant::CBS2:
      if (policy == Policy::OTREE) {
        throw Error("the overlap-tree policy needs the atrapos variant");
      }
      cache_ = std::make_unique<Cache>(config_.cache_bytes, policy);
      break;
    case Variant::ATRAPOS:
      tree_ = std::make_unique<OverlapTree>();
      cache_ = std::make_unique<Cache>(config_.cache_bytes, policy, tree_.get());
      break;
  }
  if (cache_) cache_->enable_trace(config_.trace);
}

double Engine::to_cost(double micros, std::uint64_t ops) const {
  return config_.cost_unit == CostUnit::Operations ? static_cast<double>(ops)
                                                   : micros;
}

double Engine::to_model_units(double recorded) const {
  return config_.cost_unit == CostUnit::Operations
             ? recorded * config_.coeffs.beta
             : recorded;
}

Engine::Chain Engine::build_chain(const MetapathQuery& query) const {
  const Schema& schema = hin_.schema();
  Chain chain;
  chain.query = &query;
  chain.path = query.path();
  const std::size_t n = query.length();
  const std::size_t p = n - 1;

  // A constraint binds to every position of its node type: rows of the
  // outgoing matrix, and columns of the last matrix for the final node.
  auto on = [&](char type) {
    std::vector<Constraint> out;
    for (const auto& c : query.constraints) {
      if (c.node_type == type) out.push_back(c);
    }
    return out;
  };
  for (std::size_t k = 0; k < p; ++k) {
    const auto rows = on(query.nodes[k]);
    const auto cols = k + 1 == p ? on(query.nodes[n - 1]) : std::vector<Constraint>{};
    auto m = std::make_shared<const SparseMatrix>(
        constrained_adjacency(hin_, query.edges[k], rows, cols));
    chain.spec.items.push_back(m->stats());
    chain.inputs.push_back(std::move(m));
  }

  chain.node_keys.assign(n, std::vector<ConstraintKey>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      chain.node_keys[i][j] = span_constraint_key(query, schema, i, j);
    }
  }
  chain.keys.assign(p, std::vector<CacheKey>(p));
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = a; b < p; ++b) {
      chain.keys[a][b] = CacheKey{chain.path.substr(a, b - a + 2),
                                  chain.node_keys[a][b + 1].str()};
    }
  }
  return chain;
}

namespace {

void fill_from_execution(MqeResult& r, const Plan& plan,
                         const ExecutionResult& exec,
                         const std::function<std::string(Span)>& label) {
  r.matrix = exec.result;
  r.metrics.op_count = exec.op_count;
  r.metrics.multiply_micros = exec.micros;
  r.metrics.estimated_cost = plan.estimated_cost;
  r.metrics.plan = plan.to_string(label);
}

}  // namespace

MqeResult Engine::evaluate_plain(const Chain& chain) {
  MqeResult r;
  const Plan plan = plan_chain(chain.spec, config_.coeffs);
  const ExecutionResult exec = execute_plan(plan, chain.inputs);
  fill_from_execution(r, plan, exec,
                      [&](Span s) { return chain.label(s); });
  return r;
}

MqeResult Engine::evaluate_cbs1(const Chain& chain) {
  if (chain.length() == 1) return evaluate_plain(chain);
  const CacheKey& whole = chain.key(Span{0, chain.length() - 1});
  if (MatrixPtr m = cache_->request(whole)) {
    MqeResult r;
    r.matrix = std::move(m);
    r.metrics.hits = 1;
    r.metrics.hit_keys.push_back(whole.str());
    r.metrics.plan = "[" + whole.path + "]";
    return r;
  }
  const Plan plan = plan_chain(chain.spec, config_.coeffs);
  const ExecutionResult exec = execute_plan(plan, chain.inputs);
  MqeResult r;
  fill_from_execution(r, plan, exec, [&](Span s) { return chain.label(s); });
  cache_->try_insert(
      EntryDraft{whole, exec.result, to_cost(exec.micros, exec.op_count), 1.0});
  return r;
}

MqeResult Engine::evaluate_cbs2(const Chain& chain) {
  if (chain.length() == 1) return evaluate_plain(chain);
  std::set<Span> excluded;
  MqeResult r;
  while (true) {
    auto hints = [&](Span s) {
      if (excluded.count(s)) return SpanCostHint::unknown();
      const CacheEntry* e = cache_->find(chain.key(s));
      if (e == nullptr) return SpanCostHint::unknown();
      return SpanCostHint::cached(config_.retrieval_cost, e->matrix->density());
    };
    const Plan plan = plan_chain(chain.spec, config_.coeffs, hints);
    std::optional<Span> failed;
    std::vector<std::string> hit_keys;
    auto fetch = [&](Span s) -> MatrixPtr {
      MatrixPtr m = cache_->request(chain.key(s));
      if (!m) failed = s;
      else hit_keys.push_back(chain.key(s).str());
      return m;
    };
    ExecutionResult exec;
    try {
      exec = execute_plan(plan, chain.inputs, fetch);
    } catch (const FetchError&) {
      if (!failed) throw;
      excluded.insert(*failed);
      ++r.metrics.replans;
      continue;
    }
    fill_from_execution(r, plan, exec, [&](Span s) { return chain.label(s); });
    r.metrics.hits = exec.fetched.size();
    r.metrics.hit_keys = std::move(hit_keys);
    for (const auto& p : exec.produced) {
      cache_->try_insert(EntryDraft{chain.key(p.span), p.matrix,
                                    to_cost(p.cumulative_micros,
                                            p.cumulative_ops),
                                    1.0});
    }
    return r;
  }
}

MqeResult Engine::evaluate_atrapos(const Chain& chain) {
  tree_->insert_query(chain.path, [&](std::size_t i, std::size_t j) {
    return chain.node_keys[i][j];
  });
  if (chain.length() == 1) return evaluate_plain(chain);

  std::set<Span> excluded;
  MqeResult r;
  while (true) {
    auto hints = [&](Span s) {
      if (excluded.count(s)) return SpanCostHint::unknown();
      const CacheKey& k = chain.key(s);
      SpanCostHint h = tree_->span_hint(k.path, k.constraint, chain.cells(s));
      switch (h.status) {
        case HintStatus::Cached:
          if (!cache_->contains(k)) return SpanCostHint::unknown();
          h.cost = config_.retrieval_cost;
          break;
        case HintStatus::Known:
          h.cost = to_model_units(h.cost);
          break;
        case HintStatus::Unknown:
          break;
      }
      return h;
    };
    const Plan plan = plan_chain(chain.spec, config_.coeffs, hints);
    std::optional<Span> failed;
    std::vector<std::string> hit_keys;
    auto fetch = [&](Span s) -> MatrixPtr {
      MatrixPtr m = cache_->request(chain.key(s), FrequencySource::Mirrored);
      if (!m) failed = s;
      else hit_keys.push_back(chain.key(s).str());
      return m;
    };
    ExecutionResult exec;
    try {
      exec = execute_plan(plan, chain.inputs, fetch);
    } catch (const FetchError&) {
      if (!failed) throw;
      excluded.insert(*failed);
      ++r.metrics.replans;
      continue;
    }
    fill_from_execution(r, plan, exec, [&](Span s) { return chain.label(s); });
    r.metrics.hits = exec.fetched.size();
    r.metrics.hit_keys = std::move(hit_keys);

    // Tree c is the full recompute cost of a span: fetched spans count at
    // their recorded cost.
    std::vector<double> full(plan.nodes.size(), 0.0);
    std::vector<double> own(plan.nodes.size(), 0.0);
    for (const auto& p : exec.produced) {
      own[static_cast<std::size_t>(p.node)] = to_cost(p.micros, p.ops);
    }
    for (std::size_t i = 0; i < plan.nodes.size(); ++i) {
      const PlanNode& node = plan.nodes[i];
      if (node.kind == PlanNodeKind::Multiply) {
        full[i] = full[static_cast<std::size_t>(node.left)] +
                  full[static_cast<std::size_t>(node.right)] + own[i];
      } else if (node.kind == PlanNodeKind::FetchCached) {
        const CacheKey& k = chain.key(node.span);
        const NodeStats* s = tree_->stats(k.path, k.constraint);
        full[i] = s != nullptr && s->evaluated ? s->c : 0.0;
      }
    }
    for (const auto& p : exec.produced) {
      const CacheKey& k = chain.key(p.span);
      if (NodeStats* s = tree_->stats(k.path, k.constraint)) {
        s->c = full[static_cast<std::size_t>(p.node)];
        s->rho = static_cast<double>(p.matrix->nonzeros());
        s->evaluated = true;
      }
    }

    // Cache entries carry what producing them actually cost, fetched spans
    // free; evicting a cached prefix later adds its cost back.
    if (plan.root().kind == PlanNodeKind::Multiply) {
      const ProducedSpan& root = exec.produced.back();
      ProducedCandidate whole{chain.key(root.span), root.matrix,
                              to_cost(root.cumulative_micros,
                                      root.cumulative_ops)};
      std::vector<ProducedCandidate> intermediates;
      for (std::size_t i = 0; i + 1 < exec.produced.size(); ++i) {
        const auto& p = exec.produced[i];
        intermediates.push_back({chain.key(p.span), p.matrix,
                                 to_cost(p.cumulative_micros,
                                         p.cumulative_ops)});
      }
      for (const auto& draft :
           insertion_candidates(whole, intermediates, *tree_)) {
        cache_->try_insert(draft, FrequencySource::Mirrored);
      }
    }
    return r;
  }
}

MqeResult Engine::evaluate(const MetapathQuery& query) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  validate_query(query, hin_.schema());
  const Chain chain = build_chain(query);

  const CacheCounters before = cache_ ? cache_->counters() : CacheCounters{};
  MqeResult r;
  switch (config_.variant) {
    case Variant::HRANKS: r = evaluate_plain(chain); break;
    case Variant::CBS1: r = evaluate_cbs1(chain); break;
    case Variant::CBS2: r = evaluate_cbs2(chain); break;
    case Variant::ATRAPOS: r = evaluate_atrapos(chain); break;
  }
  if (cache_) {
    const CacheCounters& after = cache_->counters();
    r.metrics.evictions = after.evictions - before.evictions;
    r.metrics.insertions = after.insertions - before.insertions;
  }
  r.source = query.nodes.front();
  r.target = query.nodes.back();
  r.metrics.micros =
      std::chrono::duration<double, std::micro>(Clock::now() - start).count();
  return r;
}

WorkloadReport Engine::run_workload(std::span<const MetapathQuery> workload,
                                    bool keep_results) {
  WorkloadReport report;
  for (const auto& q : workload) {
    QueryRecord rec;
    rec.query = q.to_string(hin_.schema());
    try {
      MqeResult r = evaluate(q);
      rec.metrics = std::move(r.metrics);
      if (keep_results) rec.result = std::move(r.matrix);
    } catch (const Error& e) {
      rec.error = e.what();
    }
    report.total_micros += rec.metrics.micros;
    report.total_ops += rec.metrics.op_count;
    report.hits += rec.metrics.hits;
    if (cache_ && !rec.error && rec.metrics.hits == 0) ++report.misses;
    rec.cumulative_micros = report.total_micros;
    rec.cumulative_ops = report.total_ops;
    report.queries.push_back(std::move(rec));
  }
  if (cache_) {
    report.evictions = cache_->counters().evictions;
    report.peak_cache_bytes = cache_->counters().peak_used;
  }
  return report;
}

}  // namespace atrapos
