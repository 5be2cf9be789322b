#include "kbq/features.hpp"

#include <algorithm>

#include "kbq/errors.hpp"

namespace kbq {

std::uint64_t hash_token(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t feature_template_hash(const KnowledgeBase& kb, const PolicyConfig& config) {
  std::uint64_t h = hash_token(kFeatureTemplateVersion);
  h = hash_mix(h, static_cast<std::uint64_t>(config.hash_bits));
  h = hash_mix(h, static_cast<std::uint64_t>(config.max_clauses));
  for (const auto& f : kb.fields()) h = hash_mix(h, hash_token(f));
  return h;
}

EncodedContext::EncodedContext(const DialogContext& context, const KnowledgeBase& kb,
                               const PolicyConfig& config)
    : vocab_(context, kb), config_(config), shift_(64 - config.hash_bits) {
  if (config.hash_bits < 4 || config.hash_bits > 30) throw ArgumentError("hash_bits must lie in [4, 30]");
  if (config.max_clauses < 0) throw ArgumentError("max_clauses must be non-negative");
  for (const auto& u : context.utterances) {
    for (const auto& w : u) bow_.push_back(hash_token(w));
  }
  std::sort(bow_.begin(), bow_.end());
  bow_.erase(std::unique(bow_.begin(), bow_.end()), bow_.end());

  for (const auto& f : vocab_.fields()) field_key_.push_back(hash_mix(0x46, hash_token(f)));
  for (const auto& c : vocab_.context_tokens()) {
    copy_key_.push_back(hash_mix(0x43, hash_token(c)));
    FieldMask m = kb.fields_of_value(c);
    copy_fields_.push_back(m);
    grounded_ |= m;
  }
}

std::uint64_t EncodedContext::action_key(Action a) const {
  switch (a.kind) {
    case ActionKind::Keyword: return hash_mix(0x4b, a.index);
    case ActionKind::Field: return field_key_[a.index];
    case ActionKind::Copy: return copy_key_[a.index];
    case ActionKind::Eoq: return 0x454f51ULL;
  }
  return 0;
}

}  // namespace kbq
