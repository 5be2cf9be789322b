#pragma once

// JSON checkpoints of policy and position models. Both record a hash of the
// feature templates and KB schema they were trained with.

#include <filesystem>

#include "json.hpp"
#include "kbq/policy.hpp"
#include "kbq/position.hpp"

namespace kbq {

nlohmann::json policy_to_json(const PolicyParameters& params);
/// Throws LoadError on malformed documents and CompatibilityError when the
/// stored template hash differs from the one computed for `kb`.
PolicyParameters policy_from_json(const nlohmann::json& doc, const KnowledgeBase& kb);

void save_policy(const PolicyParameters& params, const std::filesystem::path& path);
PolicyParameters load_policy(const std::filesystem::path& path, const KnowledgeBase& kb);

nlohmann::json position_to_json(const PositionModel& model);
PositionModel position_from_json(const nlohmann::json& doc, const KnowledgeBase& kb);

void save_position(const PositionModel& model, const std::filesystem::path& path);
PositionModel load_position(const std::filesystem::path& path, const KnowledgeBase& kb);

/// Reads a JSON file; LoadError on I/O or parse failure.
nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const nlohmann::json& doc, const std::filesystem::path& path);

}  // namespace kbq
