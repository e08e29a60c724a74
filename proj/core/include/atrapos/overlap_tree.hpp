#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "atrapos/hin.hpp"
#include "atrapos/planner.hpp"

namespace atrapos {

// Constraints that shape the result of one sub-metapath, as (offset within
// the sub-metapath, canonical text) pairs. Edge types are recorded as
// "-[symbol]->" entries wherever the node types alone are ambiguous.
struct ConstraintKey {
  std::vector<std::pair<std::uint32_t, std::string>> entries;  // sorted

  // "0:P.year>2020;1:-[cites]->"; empty when unconstrained.
  std::string str() const;
  bool empty() const { return entries.empty(); }
  // Entries with offset <= max_offset.
  ConstraintKey restricted(std::uint32_t max_offset) const;
  static ConstraintKey parse(std::string_view text);

  friend bool operator==(const ConstraintKey&, const ConstraintKey&) = default;
};

// Key of the sub-metapath spanning node positions [first, last] of the query.
// Interior constraints filter rows of the outgoing matrix, so positions
// first..last-1 contribute; position last contributes only when it is the
// final node of the query, where the constraint filters columns.
ConstraintKey span_constraint_key(const MetapathQuery& query,
                                  const Schema& schema, std::size_t first,
                                  std::size_t last);

struct NodeStats {
  std::uint32_t f = 0;
  std::optional<std::uint64_t> cache_ref;
  double c = 0.0;
  double rho = 0.0;  // nonzero count of the result
  bool evaluated = false;
  std::uint64_t last_query = ~std::uint64_t{0};
};

class OverlapTree {
 public:
  using Symbol = std::uint32_t;
  using NodeId = std::uint32_t;
  static constexpr NodeId kRoot = 0;
  static constexpr Symbol kSentinelBase = 0x100;

  struct Entry {
    ConstraintKey key;
    NodeStats stats;
  };

  struct Node {
    std::uint32_t text = 0;   // edge label = texts[text][begin, end)
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    NodeId parent = kRoot;
    std::uint32_t depth = 0;  // symbols from the root, sentinel included
    std::map<Symbol, NodeId> children;
    std::map<std::string, Entry> index;
    // Leaves only: which suffix of which query.
    std::uint32_t query = 0;
    std::uint32_t suffix = 0;

    bool is_leaf() const { return children.empty(); }
  };

  struct Touched {
    NodeId node;
    std::size_t first;  // node positions in the query, inclusive
    std::size_t last;
    std::string key;
  };
  struct InsertReport {
    std::uint64_t query = 0;
    std::vector<Touched> touched;  // internal nodes, longest first
  };

  using KeyFn = std::function<ConstraintKey(std::size_t, std::size_t)>;

  OverlapTree();

  // Inserts every suffix of `metapath` followed by a fresh sentinel. `key`
  // names the constraint key of each node span of the query.
  InsertReport insert_query(std::string_view metapath, const KeyFn& key);
  InsertReport insert_query(std::string_view metapath,
                            const ConstraintKey& key = {});

  // Node spelling exactly `sub`, or the leaf whose label is `sub` plus its
  // sentinel.
  std::optional<NodeId> find_owner(std::string_view sub) const;
  NodeStats* stats(std::string_view sub, const std::string& key);
  const NodeStats* stats(std::string_view sub, const std::string& key) const;
  const Entry* entry(NodeId node, const std::string& key) const;
  NodeStats* stats(NodeId node, const std::string& key);

  bool is_internal(NodeId node) const {
    return node != kRoot && !nodes_[node].is_leaf();
  }
  const Node& node(NodeId id) const { return nodes_[id]; }
  // Sub-metapath of a node, sentinel stripped.
  std::string label(NodeId id) const;
  std::size_t label_length(NodeId id) const;

  struct Candidate {
    std::string sub;
    std::string key;
  };
  struct Match {
    std::size_t index;  // into the candidate list
    NodeId node;
    std::uint32_t f;
  };
  // Longest candidate owned by an internal node with f >= 2 under its key;
  // ties go to higher f, then to the earlier candidate.
  std::optional<Match> longest_overlap_match(
      const std::vector<Candidate>& candidates) const;

  // Cached (0, density) when a cache entry is attached, Known(c, density)
  // once evaluated, Unknown otherwise. `cells` converts rho to density.
  SpanCostHint span_hint(std::string_view sub, const std::string& key,
                         double cells) const;

  struct EntryRef {
    NodeId node;
    std::string key;
    std::uint64_t cache_ref;
  };
  // Cached entries strictly below `node` whose key, cut to the span of
  // `node`, equals `key`.
  std::vector<EntryRef> subtree_cached_entries(NodeId node,
                                               const ConstraintKey& key) const;

  std::size_t node_count() const { return nodes_.size(); }  // root included
  std::size_t leaf_count() const;
  std::size_t internal_count() const;
  std::size_t query_count() const { return texts_.size(); }
  std::size_t total_symbols() const { return symbols_; }

  // Indented rendering: one line per node with its entries.
  std::string dump() const;

 private:
  NodeId add_node(Node n);
  NodeId split(NodeId child, std::uint32_t offset);
  void recount(NodeId node);
  void bump(NodeId node, const ConstraintKey& key, std::uint64_t query);
  std::vector<NodeId> leaves_below(NodeId node) const;
  Symbol symbol_at(const Node& n, std::uint32_t k) const {
    return texts_[n.text][n.begin + k];
  }

  std::vector<Node> nodes_;
  std::vector<std::vector<Symbol>> texts_;
  // keys_[q][first][last] for node spans of query q.
  std::vector<std::vector<std::vector<ConstraintKey>>> keys_;
  std::size_t symbols_ = 0;
};

}  // namespace atrapos
