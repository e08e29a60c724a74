#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "atrapos/hin.hpp"

namespace atrapos {

enum class Distribution { Uniform, Zipf };
enum class ConstraintMode { Entity, Range, Mixed };

std::string_view to_string(Distribution d);
std::string_view to_string(ConstraintMode m);

struct WorkloadSpec {
  std::size_t count = 500;
  std::size_t len_min = 3;  // node types per metapath
  std::size_t len_max = 5;
  double restart_p = 0.1;
  Distribution distribution = Distribution::Uniform;
  double alpha = 1.0;
  std::uint64_t seed = 42;
  // Explicit metapath universe in the query grammar; empty means every
  // schema walk with a length in [len_min, len_max].
  std::vector<std::string> metapaths;
  ConstraintMode constraint_mode = ConstraintMode::Entity;
  std::size_t constraint_pool = 64;

  void validate() const;
};

struct GeneratedQuery {
  MetapathQuery query;
  std::size_t session = 0;
};

// Every walk over the schema graph with node count in [len_min, len_max],
// in schema declaration order.
std::vector<MetapathQuery> metapath_universe(const Schema& schema,
                                             std::size_t len_min,
                                             std::size_t len_max);

// Draws ranks 0..n-1 uniformly or with P(rank k) proportional to (k+1)^-alpha.
class RankSampler {
 public:
  RankSampler(std::size_t n, Distribution dist, double alpha);

  std::size_t operator()(std::mt19937_64& rng) const;
  // Restricted to ranks with mask[k] set, renormalized. Mask must not be
  // all-false.
  std::size_t operator()(std::mt19937_64& rng,
                         const std::vector<bool>& mask) const;
  double probability(std::size_t rank) const { return p_[rank]; }
  std::size_t size() const { return w_.size(); }

 private:
  std::vector<double> w_;
  std::vector<double> p_;
  mutable std::discrete_distribution<std::size_t> full_;
};

// Session simulation: the first query opens a session with a fresh
// constraint; every later query restarts with probability restart_p, or else
// keeps the constraint and picks a metapath different from the previous one.
// The finished list is shuffled with the same generator.
std::vector<GeneratedQuery> generate_workload(const Hin& hin,
                                              const WorkloadSpec& spec);

// ATRAPOS_SEED when set and numeric, otherwise `fallback`.
std::uint64_t seed_from_env(std::uint64_t fallback);

// One query per line; lines starting with '#' are comments.
void write_workload(std::ostream& out, const std::vector<MetapathQuery>& queries,
                    const Schema& schema);
std::vector<MetapathQuery> read_workload(std::istream& in, const Schema& schema);
std::vector<MetapathQuery> read_workload(const std::filesystem::path& path,
                                         const Schema& schema);

}  // namespace atrapos
