#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "atrapos/overlap_tree.hpp"
#include "atrapos/planner.hpp"

namespace atrapos {

enum class Policy { LRU, PGDS, OTREE };

std::string_view to_string(Policy p);
std::optional<Policy> parse_policy(std::string_view s);

// Where an entry's frequency comes from. Owned: the cache counts requests
// per key itself. Mirrored: the overlap tree already counted the occurrence
// when the query was inserted, and the cache copies that value.
enum class FrequencySource { Owned, Mirrored };

struct CacheKey {
  std::string path;        // sub-metapath, e.g. "ICPA"
  std::string constraint;  // ConstraintKey::str()

  std::string str() const {
    return constraint.empty() ? path : path + "|" + constraint;
  }
  friend auto operator<=>(const CacheKey&, const CacheKey&) = default;
};

struct CacheEntry {
  std::uint64_t id = 0;
  CacheKey key;
  MatrixPtr matrix;
  std::size_t size = 0;
  double cost = 0.0;
  double f = 0.0;
  double inserted_L = 0.0;
  double h = 0.0;
  std::uint64_t inserted_seq = 0;
  std::uint64_t last_use = 0;
};

struct EntryDraft {
  CacheKey key;
  MatrixPtr matrix;
  double cost = 0.0;
  double f = 0.0;  // informational; try_insert resolves f itself
};

enum class InsertOutcome { Inserted, RejectedOversize, AlreadyCached };

struct CacheCounters {
  std::uint64_t requests = 0;
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t insertions = 0;
  std::uint64_t evictions = 0;
  std::uint64_t rejections = 0;
  std::size_t peak_used = 0;
};

class Cache {
 public:
  // Entries larger than this share of the capacity are never stored.
  static constexpr double kMaxEntryShare = 0.8;

  // `tree` is required for OTREE and for Mirrored frequencies; when given,
  // the tree's cache references are kept in sync under every policy.
  Cache(std::size_t capacity, Policy policy, OverlapTree* tree = nullptr);

  // Counts a request for `key`. On a hit refreshes recency (LRU) or
  // re-bases the entry on the current L (PGDS, OTREE). Returns the matrix
  // or nullptr.
  MatrixPtr request(const CacheKey& key,
                    FrequencySource source = FrequencySource::Owned);

  InsertOutcome try_insert(const EntryDraft& draft,
                           FrequencySource source = FrequencySource::Owned);

  bool contains(const CacheKey& key) const { return by_key_.count(key) > 0; }
  const CacheEntry* find(const CacheKey& key) const;
  std::vector<const CacheEntry*> entries() const;

  std::size_t capacity() const { return capacity_; }
  std::size_t used() const { return used_; }
  double inflation() const { return L_; }
  Policy policy() const { return policy_; }
  const CacheCounters& counters() const { return counters_; }
  double owned_frequency(const CacheKey& key) const;

  void enable_trace(bool on) { tracing_ = on; }
  const std::vector<std::string>& trace() const { return trace_; }
  void clear_trace() { trace_.clear(); }

 private:
  double resolve_frequency(const CacheKey& key, FrequencySource source) const;
  NodeStats* tree_stats(const CacheKey& key) const;
  void recompute(CacheEntry& e) const;
  CacheEntry* victim();
  void evict(CacheEntry& e);
  void adjust_subtree(const CacheEntry& anchor, double delta);
  void log(std::string line);

  std::size_t capacity_;
  Policy policy_;
  OverlapTree* tree_;
  std::size_t used_ = 0;
  double L_ = 0.0;
  std::uint64_t next_id_ = 1;
  std::uint64_t clock_ = 0;
  std::map<std::uint64_t, CacheEntry> entries_;
  std::map<CacheKey, std::uint64_t> by_key_;
  std::map<CacheKey, double> owned_f_;
  CacheCounters counters_;
  bool tracing_ = false;
  std::vector<std::string> trace_;
};

struct ProducedCandidate {
  CacheKey key;
  MatrixPtr matrix;
  double cost = 0.0;
};

// The whole query result is always a candidate. Among the intermediates, the
// longest one whose sub-metapath is an internal tree node with f >= 2 under
// its key is added (ties: higher f, then earlier production). At most two
// drafts; the second is dropped when it is the whole query.
std::vector<EntryDraft> insertion_candidates(
    const ProducedCandidate& whole,
    const std::vector<ProducedCandidate>& intermediates,
    const OverlapTree& tree);

}  // namespace atrapos
