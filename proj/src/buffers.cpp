#include "kbq/buffers.hpp"

#include "kbq/errors.hpp"

namespace kbq {

bool QueryBuffer::insert(const Query& query, double reward) {
  Query c = canonicalize(query);
  std::string key = to_text(c);
  return entries_.try_emplace(std::move(key), ScoredQuery{std::move(c), reward}).second;
}

void update_buffers(BufferPair& buffers, const Query& query, double reward) {
  if (!(reward > 0.0)) throw ArgumentError("only positive-reward queries enter the buffers");
  const Query c = canonicalize(query);
  if (buffers.contains(c)) return;
  if (reward > buffers.best_reward) {
    for (const auto& [_, sq] : buffers.high) buffers.other.insert(sq.query, sq.reward);
    buffers.high.clear();
    buffers.high.insert(c, reward);
    buffers.best_reward = reward;
  } else if (reward == buffers.best_reward) {
    buffers.high.insert(c, reward);
  } else {
    buffers.other.insert(c, reward);
  }
}

BufferPair updated_buffers(BufferPair buffers, const Query& query, double reward) {
  update_buffers(buffers, query, reward);
  return buffers;
}

void update_buffer(QueryBuffer& buffer, const Query& query, double reward) {
  if (!(reward > 0.0)) throw ArgumentError("only positive-reward queries enter the buffer");
  buffer.insert(query, reward);
}

BufferPair seed_buffer_pair(const ExplorationResult& explored) {
  BufferPair b;
  for (const auto& e : explored.entries) update_buffers(b, e.query, e.reward);
  return b;
}

QueryBuffer seed_buffer(const ExplorationResult& explored) {
  QueryBuffer b;
  for (const auto& e : explored.entries) update_buffer(b, e.query, e.reward);
  return b;
}

bool buffer_invariants_hold(const BufferPair& buffers) {
  for (const auto& [key, sq] : buffers.high) {
    if (sq.reward != buffers.best_reward) return false;
    if (buffers.other.contains_text(key)) return false;
  }
  for (const auto& [_, sq] : buffers.other) {
    if (!(sq.reward > 0.0) || !(sq.reward < buffers.best_reward)) return false;
  }
  return true;
}

}  // namespace kbq
