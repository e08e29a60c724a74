#include "atrapos/cache.hpp"

#include <algorithm>
#include <cctype>
#include <fmt/format.h>

#include "atrapos/error.hpp"

namespace atrapos {

std::string_view to_string(Policy p) {
  switch (p) {
    case Policy::LRU: return "lru";
    case Policy::PGDS: return "pgds";
    case Policy::OTREE: return "otree";
  }
  return "?";
}

std::optional<Policy> parse_policy(std::string_view s) {
  std::string lower(s);
  for (auto& ch : lower) ch = static_cast<char>(std::tolower(ch));
  if (lower == "lru") return Policy::LRU;
  if (lower == "pgds") return Policy::PGDS;
  if (lower == "otree" || lower == "atrapos") return Policy::OTREE;
  return std::nullopt;
}

Cache::Cache(std::size_t capacity, Policy policy, OverlapTree* tree)
    : capacity_(capacity), policy_(policy), tree_(tree) {
  if (policy == Policy::OTREE && tree == nullptr) {
    throw Error("the overlap-tree policy needs a tree");
  }
}

NodeStats* Cache::tree_stats(const CacheKey& key) const {
  return tree_ ? tree_->stats(key.path, key.constraint) : nullptr;
}

double Cache::owned_frequency(const CacheKey& key) const {
  auto it = owned_f_.find(key);
  return it == owned_f_.end() ? 0.0 : it->second;
}

double Cache::resolve_frequency(const CacheKey& key,
                                FrequencySource source) const {
  if (source == FrequencySource::Mirrored) {
    if (tree_ == nullptr) throw Error("mirrored frequency needs a tree");
    const NodeStats* s = tree_stats(key);
    return s != nullptr ? std::max<double>(1.0, s->f) : 1.0;
  }
  return std::max(1.0, owned_frequency(key));
}

void Cache::recompute(CacheEntry& e) const {
  e.h = e.f * e.cost / static_cast<double>(e.size) + e.inserted_L;
}

void Cache::log(std::string line) {
  if (tracing_) trace_.push_back(std::move(line));
}

const CacheEntry* Cache::find(const CacheKey& key) const {
  auto it = by_key_.find(key);
  return it == by_key_.end() ? nullptr : &entries_.at(it->second);
}

std::vector<const CacheEntry*> Cache::entries() const {
  std::vector<const CacheEntry*> out;
  for (const auto& [_, e] : entries_) out.push_back(&e);
  return out;
}

MatrixPtr Cache::request(const CacheKey& key, FrequencySource source) {
  ++counters_.requests;
  if (source == FrequencySource::Owned) owned_f_[key] += 1.0;
  const double f = resolve_frequency(key, source);
  log(fmt::format("REQUEST {} f={}", key.str(), f));
  auto it = by_key_.find(key);
  if (it == by_key_.end()) {
    ++counters_.misses;
    log(fmt::format("MISS {}", key.str()));
    return nullptr;
  }
  ++counters_.hits;
  CacheEntry& e = entries_.at(it->second);
  e.f = f;
  e.last_use = ++clock_;
  if (policy_ != Policy::LRU) e.inserted_L = L_;
  recompute(e);
  log(fmt::format("HIT {} f={} c={} s={} h={} L={}", key.str(), e.f, e.cost,
                  e.size, e.h, L_));
  return e.matrix;
}

CacheEntry* Cache::victim() {
  CacheEntry* best = nullptr;
  for (auto& [_, e] : entries_) {
    if (best == nullptr) {
      best = &e;
    } else if (policy_ == Policy::LRU) {
      if (e.last_use < best->last_use) best = &e;
    } else if (e.h < best->h ||
               (e.h == best->h && e.inserted_seq < best->inserted_seq)) {
      best = &e;
    }
  }
  return best;
}

void Cache::adjust_subtree(const CacheEntry& anchor, double delta) {
  const auto owner = tree_->find_owner(anchor.key.path);
  if (!owner) return;
  const OverlapTree::Entry* te = tree_->entry(*owner, anchor.key.constraint);
  if (te == nullptr) return;
  for (const auto& ref : tree_->subtree_cached_entries(*owner, te->key)) {
    auto it = entries_.find(ref.cache_ref);
    if (it == entries_.end() || it->first == anchor.id) continue;
    CacheEntry& e = it->second;
    e.cost = std::max(0.0, e.cost + delta);
    recompute(e);
    log(fmt::format("ADJUST {} c={} h={}", e.key.str(), e.cost, e.h));
  }
}

void Cache::evict(CacheEntry& e) {
  log(fmt::format("EVICT {} f={} c={} s={} h={} L={}", e.key.str(), e.f,
                  e.cost, e.size, e.h, L_));
  ++counters_.evictions;
  used_ -= e.size;
  if (NodeStats* s = tree_stats(e.key); s && s->cache_ref == e.id) {
    s->cache_ref.reset();
  }
  const CacheEntry gone = std::move(e);
  by_key_.erase(gone.key);
  entries_.erase(gone.id);
  if (policy_ == Policy::OTREE) adjust_subtree(gone, gone.cost);
}

InsertOutcome Cache::try_insert(const EntryDraft& draft,
                                FrequencySource source) {
  if (!draft.matrix) throw Error("cache entry without a matrix");
  if (contains(draft.key)) return InsertOutcome::AlreadyCached;
  const std::size_t s = draft.matrix->byte_size();
  if (static_cast<double>(s) > kMaxEntryShare * static_cast<double>(capacity_)) {
    ++counters_.rejections;
    log(fmt::format("REJECT {} s={} oversize", draft.key.str(), s));
    return InsertOutcome::RejectedOversize;
  }

  while (used_ + s > capacity_) {
    CacheEntry* v = victim();
    if (policy_ != Policy::LRU) L_ = std::max(L_, v->h);
    evict(*v);
  }

  CacheEntry e;
  e.id = next_id_++;
  e.key = draft.key;
  e.matrix = draft.matrix;
  e.size = s;
  e.cost = std::max(0.0, draft.cost);
  e.f = resolve_frequency(draft.key, source);
  e.inserted_L = policy_ == Policy::LRU ? 0.0 : L_;
  e.inserted_seq = e.id;
  e.last_use = ++clock_;
  recompute(e);
  used_ += s;
  counters_.peak_used = std::max(counters_.peak_used, used_);
  ++counters_.insertions;
  log(fmt::format("INSERT {} f={} c={} s={} h={} L={}", e.key.str(), e.f,
                  e.cost, e.size, e.h, L_));
  if (NodeStats* st = tree_stats(e.key)) st->cache_ref = e.id;
  by_key_.emplace(e.key, e.id);
  const CacheEntry& stored = entries_.emplace(e.id, std::move(e)).first->second;
  if (policy_ == Policy::OTREE) adjust_subtree(stored, -stored.cost);
  return InsertOutcome::Inserted;
}

std::vector<EntryDraft> insertion_candidates(
    const ProducedCandidate& whole,
    const std::vector<ProducedCandidate>& intermediates,
    const OverlapTree& tree) {
  auto frequency = [&](const CacheKey& k) {
    const NodeStats* s = tree.stats(k.path, k.constraint);
    return s != nullptr ? static_cast<double>(s->f) : 1.0;
  };
  std::vector<EntryDraft> drafts;
  drafts.push_back({whole.key, whole.matrix, whole.cost, frequency(whole.key)});

  std::vector<OverlapTree::Candidate> candidates;
  std::vector<std::size_t> source;
  for (std::size_t i = 0; i < intermediates.size(); ++i) {
    if (intermediates[i].key == whole.key) continue;
    candidates.push_back({intermediates[i].key.path,
                          intermediates[i].key.constraint});
    source.push_back(i);
  }
  if (auto m = tree.longest_overlap_match(candidates)) {
    const auto& p = intermediates[source[m->index]];
    drafts.push_back({p.key, p.matrix, p.cost, static_cast<double>(m->f)});
  }
  return drafts;
}

}  // namespace atrapos
