#include "probwipe/config.hpp"

#include <cstdlib>
#include <stdexcept>

namespace probwipe {

void Config::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("config: " + msg); };
  if (!(sample_fraction > 0.0) || sample_fraction > 1.0) fail("sample_fraction must be in (0, 1]");
  if (j < 0) fail("j must be non-negative");
  if (!(gamma > 0.0) || gamma > 64.0) fail("gamma must be in (0, 64]");
  if (delta < 0.0 || delta > 1.0) fail("delta must be in [0, 1]");
  if (!(mu > 0.0)) fail("mu must be positive");
  if (!(alpha > 0.0)) fail("alpha must be positive");
  if (max_parents < 0) fail("max_parents must be non-negative");
  if (restarts < 0) fail("restarts must be non-negative");
  if (beam < 1) fail("beam must be at least 1");
  if (esq_count < 1) fail("esq_count must be at least 1");
  if (esq_target_size < 0) fail("esq_target_size must be non-negative");
  if (confidence < 0.0 || confidence > 1.0) fail("confidence must be in [0, 1]");
  if (k < 1) fail("k must be at least 1");
}

std::uint64_t seed_from_env(std::uint64_t fallback) {
  const char* s = std::getenv("PROBWIPE_SEED");
  if (s == nullptr || *s == '\0') return fallback;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s, &end, 10);
  if (end == s || *end != '\0') return fallback;
  return static_cast<std::uint64_t>(v);
}

}  // namespace probwipe
