#include "atrapos/overlap_tree.hpp"

#include <algorithm>
#include <charconv>
#include <fmt/format.h>
#include <set>

#include "atrapos/error.hpp"

namespace atrapos {

// ----------------------------------------------------------- Keys ---------

std::string ConstraintKey::str() const {
  std::string out;
  for (const auto& [pos, text] : entries) {
    if (!out.empty()) out += ';';
    out += std::to_string(pos);
    out += ':';
    out += text;
  }
  return out;
}

ConstraintKey ConstraintKey::restricted(std::uint32_t max_offset) const {
  ConstraintKey out;
  for (const auto& e : entries) {
    if (e.first <= max_offset) out.entries.push_back(e);
  }
  return out;
}

ConstraintKey ConstraintKey::parse(std::string_view text) {
  ConstraintKey out;
  while (!text.empty()) {
    // Entry texts may contain ';' inside quoted literals.
    std::size_t end = 0;
    bool quoted = false;
    for (; end < text.size(); ++end) {
      if (quoted && text[end] == '\\') {
        ++end;
      } else if (text[end] == '"') {
        quoted = !quoted;
      } else if (text[end] == ';' && !quoted) {
        break;
      }
    }
    const auto item = text.substr(0, std::min(end, text.size()));
    const auto colon = item.find(':');
    std::uint32_t pos = 0;
    if (colon == std::string_view::npos ||
        std::from_chars(item.data(), item.data() + colon, pos).ptr !=
            item.data() + colon) {
      throw ParseError("malformed constraint key entry '" + std::string(item) +
                       "'");
    }
    out.entries.emplace_back(pos, std::string(item.substr(colon + 1)));
    text.remove_prefix(std::min(end + 1, text.size()));
  }
  std::sort(out.entries.begin(), out.entries.end());
  return out;
}

ConstraintKey span_constraint_key(const MetapathQuery& query,
                                  const Schema& schema, std::size_t first,
                                  std::size_t last) {
  if (first > last || last >= query.length()) {
    throw Error("span outside the query");
  }
  ConstraintKey key;
  const std::size_t final_node = query.length() - 1;
  for (std::size_t pos = first; pos <= last; ++pos) {
    if (pos == last && pos != final_node) break;
    for (const auto& c : query.constraints) {
      if (c.node_type == query.nodes[pos]) {
        key.entries.emplace_back(static_cast<std::uint32_t>(pos - first),
                                 c.to_string());
      }
    }
  }
  for (std::size_t k = first; k < last; ++k) {
    if (schema.edges_between(query.nodes[k], query.nodes[k + 1]).size() > 1) {
      key.entries.emplace_back(static_cast<std::uint32_t>(k - first),
                               "-[" + query.edges[k] + "]->");
    }
  }
  std::sort(key.entries.begin(), key.entries.end());
  return key;
}

// ----------------------------------------------------------- Tree ---------

OverlapTree::OverlapTree() { nodes_.emplace_back(); }

OverlapTree::NodeId OverlapTree::add_node(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size() - 1);
}

OverlapTree::NodeId OverlapTree::split(NodeId child, std::uint32_t offset) {
  const Node c = nodes_[child];
  Node mid;
  mid.text = c.text;
  mid.begin = c.begin;
  mid.end = c.begin + offset;
  mid.parent = c.parent;
  mid.depth = nodes_[c.parent].depth + offset;
  const NodeId m = add_node(std::move(mid));

  Node& lower = nodes_[child];
  lower.begin += offset;
  lower.parent = m;
  nodes_[m].children.emplace(symbol_at(lower, 0), child);
  nodes_[nodes_[m].parent].children[symbol_at(nodes_[m], 0)] = m;
  recount(m);

  // The new node now spells exactly what the leaf below it used to stand
  // for, so the leaf's result bookkeeping moves up.
  Node& leaf = nodes_[child];
  if (leaf.is_leaf() && leaf.end - leaf.begin == 1) {
    for (auto& [k, e] : leaf.index) {
      auto it = nodes_[m].index.find(k);
      if (it == nodes_[m].index.end()) continue;
      it->second.stats.cache_ref = std::exchange(e.stats.cache_ref, {});
      it->second.stats.c = e.stats.c;
      it->second.stats.rho = e.stats.rho;
      it->second.stats.evaluated = e.stats.evaluated;
    }
  }
  return m;
}

std::vector<OverlapTree::NodeId> OverlapTree::leaves_below(NodeId node) const {
  std::vector<NodeId> out;
  std::vector<NodeId> stack{node};
  while (!stack.empty()) {
    const NodeId n = stack.back();
    stack.pop_back();
    if (nodes_[n].is_leaf()) {
      out.push_back(n);
      continue;
    }
    for (const auto& [_, c] : nodes_[n].children) stack.push_back(c);
  }
  return out;
}

void OverlapTree::recount(NodeId node) {
  Node& n = nodes_[node];
  std::map<std::string, std::pair<ConstraintKey, std::set<std::uint64_t>>> seen;
  for (NodeId l : leaves_below(node)) {
    const Node& leaf = nodes_[l];
    const auto& key = keys_[leaf.query][leaf.suffix][leaf.suffix + n.depth - 1];
    auto& slot = seen[key.str()];
    slot.first = key;
    slot.second.insert(leaf.query);
  }
  n.index.clear();
  for (auto& [k, v] : seen) {
    Entry e;
    e.key = std::move(v.first);
    e.stats.f = static_cast<std::uint32_t>(v.second.size());
    e.stats.last_query = *v.second.rbegin();
    n.index.emplace(k, std::move(e));
  }
}

void OverlapTree::bump(NodeId node, const ConstraintKey& key,
                       std::uint64_t query) {
  auto [it, fresh] = nodes_[node].index.try_emplace(key.str());
  if (fresh) it->second.key = key;
  NodeStats& s = it->second.stats;
  if (s.last_query != query) {
    ++s.f;
    s.last_query = query;
  }
}

OverlapTree::InsertReport OverlapTree::insert_query(std::string_view metapath,
                                                    const KeyFn& key) {
  if (metapath.size() < 2) throw Error("metapath must have length >= 2");
  const std::size_t n = metapath.size();
  const auto q = static_cast<std::uint32_t>(texts_.size());

  std::vector<Symbol> text(metapath.begin(), metapath.end());
  for (auto& s : text) s = static_cast<unsigned char>(s);
  text.push_back(kSentinelBase + q);
  texts_.push_back(std::move(text));
  const auto& t = texts_.back();

  std::vector<std::vector<ConstraintKey>> keys(n,
                                               std::vector<ConstraintKey>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) keys[i][j] = key(i, j);
  }
  keys_.push_back(std::move(keys));
  symbols_ += n;

  InsertReport report;
  report.query = q;
  std::set<std::pair<NodeId, std::string>> reported;
  auto touch = [&](NodeId node, std::size_t start) {
    const std::size_t last = start + nodes_[node].depth - 1;
    const ConstraintKey& k = keys_[q][start][last];
    bump(node, k, q);
    if (reported.emplace(node, k.str()).second) {
      report.touched.push_back({node, start, last, k.str()});
    }
  };

  for (std::size_t i = 0; i < n; ++i) {
    NodeId cur = kRoot;
    std::size_t pos = i;
    while (true) {
      auto it = nodes_[cur].children.find(t[pos]);
      if (it == nodes_[cur].children.end()) break;
      const NodeId child = it->second;
      const std::uint32_t len = nodes_[child].end - nodes_[child].begin;
      std::uint32_t k = 0;
      while (k < len && symbol_at(nodes_[child], k) == t[pos + k]) ++k;
      if (k == len) {
        cur = child;
        pos += len;
        touch(cur, i);
        continue;
      }
      cur = split(child, k);
      pos += k;
      touch(cur, i);
      break;
    }
    Node leaf;
    leaf.text = q;
    leaf.begin = static_cast<std::uint32_t>(pos);
    leaf.end = static_cast<std::uint32_t>(t.size());
    leaf.parent = cur;
    leaf.depth = nodes_[cur].depth + (leaf.end - leaf.begin);
    leaf.query = q;
    leaf.suffix = static_cast<std::uint32_t>(i);
    Entry e;
    e.key = keys_[q][i][n - 1];
    e.stats.f = 1;
    e.stats.last_query = q;
    leaf.index.emplace(e.key.str(), std::move(e));
    const NodeId id = add_node(std::move(leaf));
    nodes_[cur].children.emplace(t[pos], id);
  }

  std::stable_sort(report.touched.begin(), report.touched.end(),
                   [](const Touched& a, const Touched& b) {
                     return a.last - a.first > b.last - b.first;
                   });
  return report;
}

OverlapTree::InsertReport OverlapTree::insert_query(std::string_view metapath,
                                                    const ConstraintKey& key) {
  return insert_query(metapath,
                      [&](std::size_t, std::size_t) { return key; });
}

std::optional<OverlapTree::NodeId> OverlapTree::find_owner(
    std::string_view sub) const {
  if (sub.empty()) return std::nullopt;
  NodeId cur = kRoot;
  std::size_t pos = 0;
  while (pos < sub.size()) {
    auto it =
        nodes_[cur].children.find(static_cast<unsigned char>(sub[pos]));
    if (it == nodes_[cur].children.end()) return std::nullopt;
    const Node& child = nodes_[it->second];
    const std::uint32_t len = child.end - child.begin;
    std::uint32_t k = 0;
    while (k < len && pos < sub.size() &&
           symbol_at(child, k) == static_cast<unsigned char>(sub[pos])) {
      ++k;
      ++pos;
    }
    if (k == len) {
      cur = it->second;
      continue;
    }
    if (pos < sub.size()) return std::nullopt;
    // Ended mid-edge: only a leaf whose remaining label is its sentinel owns
    // the string.
    if (child.is_leaf() && k + 1 == len) return it->second;
    return std::nullopt;
  }
  return cur;
}

const OverlapTree::Entry* OverlapTree::entry(NodeId node,
                                             const std::string& key) const {
  auto it = nodes_[node].index.find(key);
  return it == nodes_[node].index.end() ? nullptr : &it->second;
}

NodeStats* OverlapTree::stats(NodeId node, const std::string& key) {
  auto it = nodes_[node].index.find(key);
  return it == nodes_[node].index.end() ? nullptr : &it->second.stats;
}

NodeStats* OverlapTree::stats(std::string_view sub, const std::string& key) {
  const auto owner = find_owner(sub);
  return owner ? stats(*owner, key) : nullptr;
}

const NodeStats* OverlapTree::stats(std::string_view sub,
                                    const std::string& key) const {
  const auto owner = find_owner(sub);
  if (!owner) return nullptr;
  const Entry* e = entry(*owner, key);
  return e ? &e->stats : nullptr;
}

std::string OverlapTree::label(NodeId id) const {
  std::vector<const Node*> chain;
  for (NodeId n = id; n != kRoot; n = nodes_[n].parent) {
    chain.push_back(&nodes_[n]);
  }
  std::string out;
  for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
    for (std::uint32_t k = (*it)->begin; k < (*it)->end; ++k) {
      const Symbol s = texts_[(*it)->text][k];
      if (s < kSentinelBase) out.push_back(static_cast<char>(s));
    }
  }
  return out;
}

std::size_t OverlapTree::label_length(NodeId id) const {
  return nodes_[id].is_leaf() && id != kRoot ? nodes_[id].depth - 1
                                             : nodes_[id].depth;
}

std::optional<OverlapTree::Match> OverlapTree::longest_overlap_match(
    const std::vector<Candidate>& candidates) const {
  std::optional<Match> best;
  std::size_t best_len = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto owner = find_owner(candidates[i].sub);
    if (!owner || !is_internal(*owner)) continue;
    const Entry* e = entry(*owner, candidates[i].key);
    if (e == nullptr || e->stats.f < 2) continue;
    const std::size_t len = candidates[i].sub.size();
    if (!best || len > best_len || (len == best_len && e->stats.f > best->f)) {
      best = Match{i, *owner, e->stats.f};
      best_len = len;
    }
  }
  return best;
}

SpanCostHint OverlapTree::span_hint(std::string_view sub,
                                    const std::string& key,
                                    double cells) const {
  const NodeStats* s = stats(sub, key);
  if (s == nullptr) return SpanCostHint::unknown();
  const double density =
      cells > 0.0 ? std::clamp(s->rho / cells, 0.0, 1.0) : 0.0;
  if (s->cache_ref) return SpanCostHint::cached(0.0, density);
  if (s->evaluated) return SpanCostHint::known(s->c, density);
  return SpanCostHint::unknown();
}

std::vector<OverlapTree::EntryRef> OverlapTree::subtree_cached_entries(
    NodeId node, const ConstraintKey& key) const {
  std::vector<EntryRef> out;
  const std::size_t span = label_length(node);
  const auto cut = static_cast<std::uint32_t>(span >= 2 ? span - 2 : 0);
  std::vector<NodeId> stack;
  for (auto it = nodes_[node].children.rbegin();
       it != nodes_[node].children.rend(); ++it) {
    stack.push_back(it->second);
  }
  while (!stack.empty()) {
    const NodeId n = stack.back();
    stack.pop_back();
    for (const auto& [k, e] : nodes_[n].index) {
      if (!e.stats.cache_ref) continue;
      const ConstraintKey shared =
          span >= 2 ? e.key.restricted(cut) : ConstraintKey{};
      if (shared == key) out.push_back({n, k, *e.stats.cache_ref});
    }
    for (auto it = nodes_[n].children.rbegin(); it != nodes_[n].children.rend();
         ++it) {
      stack.push_back(it->second);
    }
  }
  return out;
}

std::size_t OverlapTree::leaf_count() const {
  std::size_t n = 0;
  for (NodeId i = 1; i < nodes_.size(); ++i) n += nodes_[i].is_leaf();
  return n;
}

std::size_t OverlapTree::internal_count() const {
  return nodes_.size() - 1 - leaf_count();
}

std::string OverlapTree::dump() const {
  std::string out = "(root)\n";
  std::vector<std::pair<NodeId, int>> stack;
  for (auto it = nodes_[kRoot].children.rbegin();
       it != nodes_[kRoot].children.rend(); ++it) {
    stack.emplace_back(it->second, 1);
  }
  while (!stack.empty()) {
    const auto [id, level] = stack.back();
    stack.pop_back();
    const Node& n = nodes_[id];
    std::string edge;
    for (std::uint32_t k = n.begin; k < n.end; ++k) {
      const Symbol s = texts_[n.text][k];
      edge += s < kSentinelBase ? std::string(1, static_cast<char>(s))
                                : fmt::format("${}", s - kSentinelBase);
    }
    out += fmt::format("{:{}}{} ({})\n", "", 2 * level, edge, label(id));
    for (const auto& [k, e] : n.index) {
      out += fmt::format("{:{}}[{}] f={} c={} rho={}{}\n", "", 2 * level + 4,
                         k.empty() ? "-" : k, e.stats.f, e.stats.c,
                         e.stats.rho,
                         e.stats.cache_ref
                             ? fmt::format(" cached#{}", *e.stats.cache_ref)
                             : std::string());
    }
    for (auto it = n.children.rbegin(); it != n.children.rend(); ++it) {
      stack.emplace_back(it->second, level + 1);
    }
  }
  return out;
}

}  // namespace atrapos
