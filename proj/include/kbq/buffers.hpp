#pragma once

// Per-context replay buffers of positive-reward queries.

#include <map>
#include <string>
#include <vector>

#include "kbq/exploration.hpp"
#include "kbq/kb.hpp"

namespace kbq {

/// Set of distinct canonical queries with cached rewards.
class QueryBuffer {
 public:
  bool contains(const Query& canonical) const { return entries_.contains(to_text(canonical)); }
  bool contains_text(const std::string& text) const { return entries_.contains(text); }
  /// Returns false if the query was already present.
  bool insert(const Query& query, double reward);
  void clear() { entries_.clear(); }
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }

  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

 private:
  std::map<std::string, ScoredQuery> entries_;
};

/// B_h holds the queries at the best reward seen so far, B_o every other
/// positive-reward query.
struct BufferPair {
  QueryBuffer high;
  QueryBuffer other;
  double best_reward = 0.0;

  bool contains(const Query& canonical) const { return high.contains(canonical) || other.contains(canonical); }
};

/// Throws ArgumentError if reward <= 0.
void update_buffers(BufferPair& buffers, const Query& query, double reward);
BufferPair updated_buffers(BufferPair buffers, const Query& query, double reward);

/// Single MAPO buffer: every positive-reward query.
void update_buffer(QueryBuffer& buffer, const Query& query, double reward);

BufferPair seed_buffer_pair(const ExplorationResult& explored);
QueryBuffer seed_buffer(const ExplorationResult& explored);

/// Checks disjointness and the reward ordering of the two buffers.
bool buffer_invariants_hold(const BufferPair& buffers);

}  // namespace kbq
