#include "atrapos/workload.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <set>

#include "atrapos/error.hpp"

namespace atrapos {

std::string_view to_string(Distribution d) {
  return d == Distribution::Zipf ? "zipf" : "uniform";
}

std::string_view to_string(ConstraintMode m) {
  switch (m) {
    case ConstraintMode::Entity: return "entity";
    case ConstraintMode::Range: return "range";
    case ConstraintMode::Mixed: return "mixed";
  }
  return "?";
}

void WorkloadSpec::validate() const {
  if (!(restart_p > 0.0 && restart_p <= 1.0)) {
    throw Error("restart probability must lie in (0, 1]");
  }
  if (distribution == Distribution::Zipf && !(alpha > 0.0)) {
    throw Error("zipf exponent must be positive");
  }
  if (len_min < 2 || len_max < len_min) {
    throw Error("metapath length range must satisfy 2 <= min <= max");
  }
  if (constraint_pool == 0) throw Error("constraint pool must be non-empty");
}

std::vector<MetapathQuery> metapath_universe(const Schema& schema,
                                             std::size_t len_min,
                                             std::size_t len_max) {
  std::vector<MetapathQuery> out;
  MetapathQuery walk;
  std::function<void()> extend = [&] {
    if (walk.length() >= len_min) out.push_back(walk);
    if (walk.length() == len_max) return;
    for (const auto& e : schema.edge_types()) {
      if (e.source != walk.nodes.back()) continue;
      walk.nodes.push_back(e.target);
      walk.edges.push_back(e.symbol);
      extend();
      walk.nodes.pop_back();
      walk.edges.pop_back();
    }
  };
  for (const auto& n : schema.node_types()) {
    walk.nodes = {n.symbol};
    walk.edges.clear();
    extend();
  }
  return out;
}

RankSampler::RankSampler(std::size_t n, Distribution dist, double alpha) {
  if (n == 0) throw Error("cannot sample from an empty universe");
  w_.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    w_[k] = dist == Distribution::Zipf
                ? std::pow(static_cast<double>(k + 1), -alpha)
                : 1.0;
  }
  double total = 0.0;
  for (double w : w_) total += w;
  p_.resize(n);
  for (std::size_t k = 0; k < n; ++k) p_[k] = w_[k] / total;
  full_ = std::discrete_distribution<std::size_t>(w_.begin(), w_.end());
}

std::size_t RankSampler::operator()(std::mt19937_64& rng) const {
  return full_(rng);
}

std::size_t RankSampler::operator()(std::mt19937_64& rng,
                                    const std::vector<bool>& mask) const {
  std::vector<double> w(w_.size(), 0.0);
  bool any = false;
  for (std::size_t k = 0; k < w_.size(); ++k) {
    if (mask[k]) {
      w[k] = w_[k];
      any = true;
    }
  }
  if (!any) throw Error("no eligible item to sample");
  std::discrete_distribution<std::size_t> d(w.begin(), w.end());
  return d(rng);
}

namespace {

Constraint entity_constraint(const Hin& hin, char type, std::mt19937_64& rng) {
  const NodeTable& t = hin.nodes(type);
  std::uniform_int_distribution<std::size_t> row(0, t.size() - 1);
  Constraint c;
  c.node_type = type;
  c.property = "id";
  c.op = CompareOp::Equal;
  c.value = t.value(row(rng), 0);
  return c;
}

std::optional<Constraint> range_constraint(const Hin& hin, char type,
                                           std::mt19937_64& rng) {
  const NodeTypeDecl& decl = hin.schema().node_type(type);
  std::vector<std::size_t> columns;
  for (std::size_t p = 0; p < decl.properties.size(); ++p) {
    if (decl.properties[p].kind == ValueKind::Integer) columns.push_back(p + 1);
  }
  const NodeTable& t = hin.nodes(type);
  if (columns.empty() || t.size() == 0) return std::nullopt;
  std::uniform_int_distribution<std::size_t> pick(0, columns.size() - 1);
  const std::size_t col = columns[pick(rng)];
  std::int64_t lo = std::numeric_limits<std::int64_t>::max();
  std::int64_t hi = std::numeric_limits<std::int64_t>::min();
  for (std::size_t r = 0; r < t.size(); ++r) {
    const auto v = std::get<std::int64_t>(t.value(r, col));
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  static constexpr CompareOp kOps[] = {CompareOp::Greater, CompareOp::Less,
                                       CompareOp::Equal};
  std::uniform_int_distribution<int> op(0, 2);
  std::uniform_int_distribution<std::int64_t> threshold(lo, hi);
  Constraint c;
  c.node_type = type;
  c.property = t.column_names()[col];
  c.op = kOps[op(rng)];
  c.value = threshold(rng);
  return c;
}

bool contains_type(const MetapathQuery& q, char type) {
  return std::find(q.nodes.begin(), q.nodes.end(), type) != q.nodes.end();
}

}  // namespace

std::vector<GeneratedQuery> generate_workload(const Hin& hin,
                                              const WorkloadSpec& spec) {
  spec.validate();
  const Schema& schema = hin.schema();
  std::vector<MetapathQuery> universe;
  if (spec.metapaths.empty()) {
    universe = metapath_universe(schema, spec.len_min, spec.len_max);
  } else {
    for (const auto& text : spec.metapaths) {
      MetapathQuery q = parse_metapath(text, schema);
      q.constraints.clear();
      universe.push_back(std::move(q));
    }
  }
  if (universe.empty()) throw Error("metapath universe is empty");

  std::mt19937_64 rng(spec.seed);

  // Constraint pool over the node types that the universe can host.
  std::vector<char> types;
  for (const auto& n : schema.node_types()) {
    const bool used = std::any_of(universe.begin(), universe.end(),
                                  [&](const auto& q) {
                                    return contains_type(q, n.symbol);
                                  });
    if (used && hin.nodes(n.symbol).size() > 0) types.push_back(n.symbol);
  }
  if (types.empty()) throw Error("no node type can carry a constraint");
  std::vector<Constraint> pool;
  std::set<std::string> seen;
  std::uniform_int_distribution<std::size_t> pick_type(0, types.size() - 1);
  std::bernoulli_distribution coin(0.5);
  for (std::size_t attempt = 0;
       attempt < 8 * spec.constraint_pool && pool.size() < spec.constraint_pool;
       ++attempt) {
    const char type = types[pick_type(rng)];
    std::optional<Constraint> c;
    const bool range =
        spec.constraint_mode == ConstraintMode::Range ||
        (spec.constraint_mode == ConstraintMode::Mixed && coin(rng));
    if (range) c = range_constraint(hin, type, rng);
    if (!c) c = entity_constraint(hin, type, rng);
    if (seen.insert(c->to_string()).second) pool.push_back(std::move(*c));
  }

  const RankSampler constraint_rank(pool.size(), spec.distribution, spec.alpha);
  const RankSampler path_rank(universe.size(), spec.distribution, spec.alpha);
  std::bernoulli_distribution restart(spec.restart_p);

  std::vector<GeneratedQuery> out;
  out.reserve(spec.count);
  std::size_t session = 0;
  std::size_t previous = universe.size();
  const Constraint* current = nullptr;
  std::vector<bool> mask(universe.size());
  for (std::size_t i = 0; i < spec.count; ++i) {
    if (i == 0 || restart(rng)) {
      current = &pool[constraint_rank(rng)];
      if (i > 0) ++session;
      previous = universe.size();
    }
    bool any = false;
    for (std::size_t k = 0; k < universe.size(); ++k) {
      mask[k] = contains_type(universe[k], current->node_type) && k != previous;
      any = any || mask[k];
    }
    if (!any) {
      // The only host metapath is the previous one; repeat it.
      mask[previous] = true;
    }
    const std::size_t m = path_rank(rng, mask);
    GeneratedQuery g;
    g.query = universe[m];
    g.query.constraints = {*current};
    g.session = session;
    out.push_back(std::move(g));
    previous = m;
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

std::uint64_t seed_from_env(std::uint64_t fallback) {
  const char* v = std::getenv("ATRAPOS_SEED");
  if (v == nullptr || *v == '\0') return fallback;
  char* end = nullptr;
  const unsigned long long s = std::strtoull(v, &end, 10);
  return end != nullptr && *end == '\0' ? s : fallback;
}

void write_workload(std::ostream& out, const std::vector<MetapathQuery>& queries,
                    const Schema& schema) {
  for (const auto& q : queries) out << q.to_string(schema) << '\n';
}

std::vector<MetapathQuery> read_workload(std::istream& in,
                                         const Schema& schema) {
  std::vector<MetapathQuery> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    if (line.back() == '\r') line.pop_back();
    try {
      out.push_back(parse_metapath(line, schema));
    } catch (const ParseError& e) {
      throw ParseError("workload line " + std::to_string(number) + ": " +
                       e.what());
    }
  }
  return out;
}

std::vector<MetapathQuery> read_workload(const std::filesystem::path& path,
                                         const Schema& schema) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open workload " + path.string());
  return read_workload(in, schema);
}

}  // namespace atrapos
