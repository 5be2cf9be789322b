#pragma once

// Per-turn logistic classifier deciding whether the KB query fires at a turn.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "kbq/dialog.hpp"
#include "kbq/kb.hpp"

namespace kbq {

inline constexpr std::string_view kPositionFeatureVersion = "kbq-position-v1";

struct PositionConfig {
  int hash_bits = 14;
  double tau = 0.5;
  int epochs = 40;
  double learning_rate = 0.05;
  double l2 = 1e-5;
  std::uint64_t seed = 0;

  void validate() const;
};

struct PositionModel {
  int hash_bits = 14;
  double tau = 0.5;
  std::uint64_t template_hash = 0;
  std::vector<double> weights;
  /// Set when every training label was positive.
  bool degenerate = false;
};

using SparseFeatures = std::vector<std::pair<std::uint32_t, double>>;

/// Features of turn t (1-based) computed from c_1^u .. c_t^u.
///   bias, turn index, KB-valued user tokens per field, new candidate clause
///   in the latest user utterance, distinct fields with a candidate clause,
///   hashed words of user utterances, of the latest user utterance and of
///   the latest system utterance.
SparseFeatures position_features(const Dialog& dialog, int t, const KnowledgeBase& kb, int hash_bits);

std::uint64_t position_template_hash(const KnowledgeBase& kb, int hash_bits);

/// Fits on turns 1..label of each dialog with a label (label 1 at the
/// labelled turn, 0 before). labels[i] is the label of corpus[i].
/// Throws ArgumentError if no dialog carries a label.
PositionModel train_position(const std::vector<Dialog>& corpus, const std::vector<std::optional<int>>& labels,
                             const KnowledgeBase& kb, const PositionConfig& config);

std::vector<double> turn_probabilities(const PositionModel& model, const Dialog& dialog, const KnowledgeBase& kb);

/// First turn whose probability reaches tau, if any.
std::optional<int> first_crossing(const std::vector<double>& probs, double tau);

/// First crossing, falling back to the last turn.
int predict_position(const PositionModel& model, const Dialog& dialog, const KnowledgeBase& kb);

struct PositionMetrics {
  /// Probability >= tau at the gold turn and < tau at every earlier turn.
  double accuracy = 0.0;
  /// Predicted position (with fallback) equals gold.
  double lenient_accuracy = 0.0;
  double average_turn_difference = 0.0;
  std::size_t dialogs = 0;
};

/// Throws ArgumentError if a dialog lacks a gold position or the corpus is empty.
PositionMetrics position_metrics(const PositionModel& model, const std::vector<Dialog>& corpus,
                                 const KnowledgeBase& kb);

nlohmann::json to_json(const PositionMetrics& m);

}  // namespace kbq
