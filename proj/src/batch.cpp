#include "kbq/batch.hpp"

#include <charconv>
#include <cstdlib>
#include <cstring>

#include "kbq/errors.hpp"

namespace kbq {

int default_jobs() {
  const char* env = std::getenv("KBQ_JOBS");
  if (env == nullptr || *env == '\0') return 1;
  int v = 0;
  auto [ptr, ec] = std::from_chars(env, env + std::strlen(env), v);
  if (ec != std::errc{} || *ptr != '\0' || v < 1) return 1;
  return v;
}

void reduce_into(std::span<const std::vector<double>> slots, double scale, std::span<double> out) {
  for (const auto& s : slots) {
    if (s.empty()) continue;
    if (s.size() != out.size()) throw ArgumentError("gradient slot has the wrong dimension");
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += scale * s[k];
  }
}

}  // namespace kbq
