#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "atrapos/cache.hpp"
#include "atrapos/cost_model.hpp"
#include "atrapos/hin.hpp"
#include "atrapos/overlap_tree.hpp"
#include "atrapos/planner.hpp"

namespace atrapos {

enum class Variant { HRANKS, CBS1, CBS2, ATRAPOS };

std::string_view to_string(Variant v);
std::optional<Variant> parse_variant(std::string_view s);

// Unit of recorded multiplication costs (tree c, cache c). Microseconds is
// what the cost model is fitted in; Operations uses scalar op counts, which
// makes plans and cache decisions reproducible run to run.
enum class CostUnit { Microseconds, Operations };

struct EngineConfig {
  Variant variant = Variant::ATRAPOS;
  // Defaults: LRU for the CBS variants, OTREE for ATRAPOS.
  std::optional<Policy> policy;
  std::size_t cache_bytes = std::size_t{64} << 20;
  CostCoefficients coeffs{0.002, 0.004, 0.006};
  double retrieval_cost = 0.0;
  CostUnit cost_unit = CostUnit::Microseconds;
  bool trace = false;

  Policy effective_policy() const;
};

struct QueryMetrics {
  double micros = 0.0;          // whole evaluation, planning included
  double multiply_micros = 0.0;
  std::uint64_t op_count = 0;
  std::size_t hits = 0;
  std::size_t evictions = 0;
  std::size_t insertions = 0;
  std::size_t replans = 0;
  double estimated_cost = 0.0;
  std::string plan;
  std::vector<std::string> hit_keys;
};

struct MqeResult {
  char source = '?';
  char target = '?';
  MatrixPtr matrix;
  QueryMetrics metrics;
};

struct QueryRecord {
  std::string query;
  std::optional<std::string> error;
  QueryMetrics metrics;
  double cumulative_micros = 0.0;
  std::uint64_t cumulative_ops = 0;
  MatrixPtr result;  // kept only when requested
};

struct WorkloadReport {
  std::vector<QueryRecord> queries;
  double total_micros = 0.0;
  std::uint64_t total_ops = 0;
  std::size_t hits = 0;
  // Queries answered without any cache hit; zero for uncached variants.
  std::size_t misses = 0;
  std::size_t evictions = 0;
  std::size_t peak_cache_bytes = 0;
};

// One engine per workload; queries are evaluated strictly in order.
class Engine {
 public:
  Engine(const Hin& hin, EngineConfig config);

  MqeResult evaluate(const MetapathQuery& query);

  // Per-query errors are recorded and the run continues.
  WorkloadReport run_workload(std::span<const MetapathQuery> workload,
                              bool keep_results = false);

  const EngineConfig& config() const { return config_; }
  const Cache* cache() const { return cache_.get(); }
  const OverlapTree* tree() const { return tree_.get(); }

 private:
  struct Chain;
  Chain build_chain(const MetapathQuery& query) const;
  MqeResult evaluate_plain(const Chain& chain);
  MqeResult evaluate_cbs1(const Chain& chain);
  MqeResult evaluate_cbs2(const Chain& chain);
  MqeResult evaluate_atrapos(const Chain& chain);
  double to_cost(double micros, std::uint64_t ops) const;
  double to_model_units(double recorded) const;

  const Hin& hin_;
  EngineConfig config_;
  std::unique_ptr<OverlapTree> tree_;
  std::unique_ptr<Cache> cache_;
};

}  // namespace atrapos
