#pragma once

// Synthetic restaurant KB and template dialogs with a planted correlation
// between cuisine and price range.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "kbq/dialog.hpp"
#include "kbq/kb.hpp"

namespace kbq {

struct IntentShape {
  std::vector<std::string> fields;
  double weight = 1.0;
};

struct BenchConfig {
  int n_rows = 110;
  int n_train = 406;
  int n_val = 135;
  int n_test = 135;
  /// Fraction of each cuisine's rows that carry that cuisine's partner price.
  /// 0 means cuisine and price are drawn independently.
  double rho = 0.875;
  int cuisine_cardinality = 13;
  int price_cardinality = 3;
  int area_cardinality = 5;
  int rating_cardinality = 5;
  std::vector<IntentShape> intents = {
      {{"cuisine", "pricerange"}, 0.45},
      {{"area", "cuisine", "pricerange"}, 0.2},
      {{"cuisine"}, 0.1},
      {{"area", "cuisine"}, 0.1},
      {{"area", "pricerange"}, 0.1},
      {{"area"}, 0.05},
  };
  /// Fraction of dialogs whose first new system entity appears at the gold turn.
  double heuristic_match = 0.8;
  /// Probability that E^s holds two requested fields instead of one.
  double second_request = 0.2;
  /// Maximum number of small-talk turns before the first slot question.
  int max_small_talk = 1;
  /// Fraction of dialogs where the system volunteers the target row's value
  /// of a field outside the intent before the query turn.
  double overconstrain = 0.0;
  std::uint64_t seed = 7;

  /// Throws ArgumentError on out-of-range settings.
  void validate() const;
  nlohmann::json to_json() const;
  static BenchConfig from_json(const nlohmann::json& j);
};

struct Benchmark {
  KnowledgeBase kb;
  std::vector<Dialog> train;
  std::vector<Dialog> val;
  std::vector<Dialog> test;
  std::map<std::string, std::string> partner_price;
  nlohmann::json manifest;
};

Benchmark generate(const BenchConfig& config);

/// Writes kb.json, train.json, val.json, test.json and manifest.json.
void save_benchmark(const Benchmark& bench, const std::filesystem::path& dir);

/// Fraction of rows whose price is the partner price of their cuisine.
double achieved_correlation(const KnowledgeBase& kb, const std::map<std::string, std::string>& partner_price);

struct GoldReport {
  std::size_t dialogs = 0;
  double min_gold_reward = 0.0;
  double max_gold_reward = 0.0;
  /// Over dialogs with at least two gold clauses: gold reward minus the best
  /// reward of a proper nonempty subset of its clauses.
  double min_partial_gap = 0.0;
  double mean_partial_gap = 0.0;
  /// Dialogs where some partial query is within 20% relative of the gold reward.
  std::size_t confusable = 0;
  std::size_t multi_clause = 0;
};

/// Throws ValidationError naming the dialog if a gold query is missing or
/// earns no reward.
GoldReport verify_gold(const std::vector<Dialog>& corpus, const KnowledgeBase& kb);

nlohmann::json to_json(const GoldReport& report);

}  // namespace kbq
