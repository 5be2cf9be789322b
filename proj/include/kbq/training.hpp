#pragma once

// Epoch loop over per-dialog estimators with minibatched SGD and early
// stopping on validation reward.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "kbq/buffers.hpp"
#include "kbq/dialog.hpp"
#include "kbq/features.hpp"
#include "kbq/metrics.hpp"
#include "kbq/policy.hpp"
#include "kbq/position.hpp"

namespace kbq {

enum class EstimatorKind { Reinforce, BeamSearch, RandomizedBeam, Mapo, MbMapo, Supervised, SupervisedRl };

/// reinforce | bs | rbs | mapo | mbmapo | sl | slrl
EstimatorKind parse_estimator(const std::string& name);
std::string estimator_name(EstimatorKind kind);

enum class PositionMode { Gold, Heuristic, Predicted };
PositionMode parse_position_mode(const std::string& name);
std::string position_mode_name(PositionMode mode);

struct TrainConfig {
  EstimatorKind estimator = EstimatorKind::MbMapo;
  double alpha = 0.1;
  double alpha_h = 0.5;
  double alpha_o = 0.1;
  double lambda = 0.1;
  double epsilon = 0.15;
  int num_samples = 8;
  int beam_width = 5;
  double learning_rate = 0.3;
  int batch_size = 8;
  int max_epochs = 20;
  int patience = 5;
  std::uint64_t seed = 0;
  int max_clauses = kDefaultMaxClauses;
  int hash_bits = 16;
  /// Queries with fewer clauses never enter the replay buffers. The default
  /// keeps out the match-everything query, whose reward is tiny but positive.
  int min_buffer_clauses = 1;

  /// Throws ArgumentError on out-of-range values.
  void validate() const;
  /// Names of settings that the chosen estimator ignores but differ from defaults.
  std::vector<std::string> ignored_settings() const;
  PolicyConfig policy_config() const { return {hash_bits, max_clauses}; }

  nlohmann::json to_json() const;
  /// Keys absent from `j` keep their values in `base`.
  static TrainConfig from_json(const nlohmann::json& j, TrainConfig base);
  static TrainConfig from_json(const nlohmann::json& j);
};

struct EpochRecord {
  int epoch = 0;
  QueryMetrics train;
  std::optional<QueryMetrics> val;
  /// Averages over the training contexts visited in the epoch, taken from the
  /// estimator diagnostics. Buffer masses are only set for MAPO / mB-MAPO.
  double avg_pi_bh = 0.0;
  double avg_pi_bo = 0.0;
  double avg_pi_c_bh = 0.0;
  double avg_pi_c_bo = 0.0;
  double avg_buffer_size = 0.0;
  std::size_t shortfall = 0;
  std::size_t new_buffer_entries = 0;
};

struct TrainResult {
  PolicyParameters params;  // best validation epoch
  EstimatorKind estimator = EstimatorKind::MbMapo;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  /// Contexts left out of training: empty E^s for RL, unreachable gold for SL.
  std::size_t skipped = 0;
  bool stopped_early = false;
};

struct TrainData {
  const std::vector<Dialog>* corpus = nullptr;
  std::vector<int> positions;
};

/// Runs training. `val` may be null, in which case every epoch is kept and
/// the last one is returned. `log` receives one progress line per epoch.
TrainResult train(const TrainData& train_data, const TrainData* val, const KnowledgeBase& kb,
                  const TrainConfig& config, int jobs = 1, std::ostream* log = nullptr);

/// Per-epoch (avg pi_Bh, avg pi_Bo); empty unless the run used mB-MAPO.
std::vector<std::pair<double, double>> buffer_dynamics(const TrainResult& result);

/// Rows `epoch,split,metric,value`.
void write_metrics_csv(const TrainResult& result, std::ostream& out);
nlohmann::json history_to_json(const TrainResult& result);

/// Positions for a corpus under a run mode. Heuristic uses stored labels when
/// present, otherwise recomputes them; dialogs without any heuristic match
/// fall back to their last turn. Predicted requires a model.
std::vector<int> resolve_positions(const std::vector<Dialog>& corpus, PositionMode mode, const KnowledgeBase& kb,
                                   const PositionModel* model = nullptr);

/// Shortest round-trip decimal form, so CSV bytes depend only on the value.
std::string format_double(double v);

}  // namespace kbq
