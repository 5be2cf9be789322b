#include "kbq/checkpoint.hpp"

#include <cstdio>
#include <fstream>

#include "kbq/errors.hpp"

namespace kbq {

namespace {

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t parse_hex(const std::string& s) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used, 16);
    if (used != s.size()) throw LoadError("malformed template hash '" + s + "'");
    return v;
  } catch (const std::logic_error&) {
    throw LoadError("malformed template hash '" + s + "'");
  }
}

nlohmann::json sparse(const std::vector<double>& w) {
  nlohmann::json out = nlohmann::json::array();
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] != 0.0) out.push_back({i, w[i]});
  }
  return out;
}

std::vector<double> dense(const nlohmann::json& entries, std::size_t dim) {
  if (!entries.is_array()) throw LoadError("weights must be an array of [index, value] pairs");
  std::vector<double> w(dim, 0.0);
  for (const auto& e : entries) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_unsigned() || !e[1].is_number()) {
      throw LoadError("weights must be an array of [index, value] pairs");
    }
    const auto i = e[0].get<std::size_t>();
    if (i >= dim) throw LoadError("weight index " + std::to_string(i) + " outside the feature space");
    w[i] = e[1].get<double>();
  }
  return w;
}

void check_hash(std::uint64_t stored, std::uint64_t expected, const char* what) {
  if (stored != expected) {
    throw CompatibilityError(std::string(what) + " feature-template hash " + hex(stored) +
                             " does not match this knowledge base and build (" + hex(expected) + ")");
  }
}

}  // namespace

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open " + path.string());
  try {
    nlohmann::json doc;
    in >> doc;
    return doc;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_json_file(const nlohmann::json& doc, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << doc.dump(1) << '\n';
}

nlohmann::json policy_to_json(const PolicyParameters& p) {
  return {{"kind", "policy"},
          {"feature_template", std::string(kFeatureTemplateVersion)},
          {"template_hash", hex(p.template_hash)},
          {"hash_bits", p.config.hash_bits},
          {"max_clauses", p.config.max_clauses},
          {"weights", sparse(p.weights)}};
}

PolicyParameters policy_from_json(const nlohmann::json& doc, const KnowledgeBase& kb) {
  if (!doc.is_object() || doc.value("kind", "") != "policy") throw LoadError("not a policy checkpoint");
  PolicyParameters p;
  try {
    p.config.hash_bits = doc.at("hash_bits").get<int>();
    p.config.max_clauses = doc.at("max_clauses").get<int>();
    p.template_hash = parse_hex(doc.at("template_hash").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("malformed policy checkpoint: ") + e.what());
  }
  if (p.config.hash_bits < 4 || p.config.hash_bits > 30) throw LoadError("policy hash_bits out of range");
  if (p.config.max_clauses < 1 || p.config.max_clauses > 8) throw LoadError("policy max_clauses out of range");
  check_hash(p.template_hash, feature_template_hash(kb, p.config), "policy");
  p.weights = dense(doc.at("weights"), p.config.dim());
  return p;
}

void save_policy(const PolicyParameters& params, const std::filesystem::path& path) {
  write_json_file(policy_to_json(params), path);
}

PolicyParameters load_policy(const std::filesystem::path& path, const KnowledgeBase& kb) {
  return policy_from_json(read_json_file(path), kb);
}

nlohmann::json position_to_json(const PositionModel& m) {
  return {{"kind", "position"},
          {"feature_template", std::string(kPositionFeatureVersion)},
          {"template_hash", hex(m.template_hash)},
          {"hash_bits", m.hash_bits},
          {"tau", m.tau},
          {"degenerate", m.degenerate},
          {"weights", sparse(m.weights)}};
}

PositionModel position_from_json(const nlohmann::json& doc, const KnowledgeBase& kb) {
  if (!doc.is_object() || doc.value("kind", "") != "position") throw LoadError("not a position checkpoint");
  PositionModel m;
  try {
    m.hash_bits = doc.at("hash_bits").get<int>();
    m.tau = doc.at("tau").get<double>();
    m.degenerate = doc.value("degenerate", false);
    m.template_hash = parse_hex(doc.at("template_hash").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("malformed position checkpoint: ") + e.what());
  }
  if (m.hash_bits < 4 || m.hash_bits > 24) throw LoadError("position hash_bits out of range");
  if (!(m.tau > 0.0 && m.tau < 1.0)) throw LoadError("position tau out of range");
  check_hash(m.template_hash, position_template_hash(kb, m.hash_bits), "position");
  m.weights = dense(doc.at("weights"), std::size_t{1} << m.hash_bits);
  return m;
}

void save_position(const PositionModel& model, const std::filesystem::path& path) {
  write_json_file(position_to_json(model), path);
}

PositionModel load_position(const std::filesystem::path& path, const KnowledgeBase& kb) {
  return position_from_json(read_json_file(path), kb);
}

}  // namespace kbq
