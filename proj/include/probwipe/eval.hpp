#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "probwipe/dataset.hpp"
#include "probwipe/query_engine.hpp"

namespace probwipe {

// Per-cell corruption: with probability `rate`, replace the cell by a typo
// (1-4 random character edits, steered away from other domain values), a
// uniformly drawn different domain value, or the missing marker, weighted by
// `mix`. Cells that are already missing stay untouched.
struct NoiseSpec {
  double rate = 0.2;
  std::array<double, 3> mix{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};  // typo, substitution, deletion
  std::uint64_t seed = 1;
};

Dataset inject_noise(const Dataset& clean, const NoiseSpec& spec);

struct OfflineEval {
  std::int64_t injected = 0;          // cells where dirty differs from truth
  std::int64_t values_corrected = 0;  // corrupted cells restored to the truth
  std::int64_t false_positives = 0;   // clean cells the cleaner broke
  std::int64_t net_gain = 0;
  double pct_corrupt_cleaned = 0.0;
};

// Row ids of the three datasets must line up.
OfflineEval evaluate_offline(const Dataset& cleaned, const Dataset& dirty, const Dataset& truth);

using RankedIdsFn = std::function<std::vector<std::int64_t>(const Query&)>;

struct QueryEval {
  int num_queries = 0;
  int k = 10;
  // Precision at recall 0, 0.1, ..., 1.0 averaged over queries; recall
  // denominators are the per-query ground-truth result sizes, and the entry at
  // recall 0 is the precision of the top-ranked result.
  std::vector<double> recall_levels;
  std::vector<double> system_precision;
  std::vector<double> baseline_precision;
  double system_p_at_k = 0.0;
  double baseline_p_at_k = 0.0;
};

// Draws num_queries random one- or two-constraint queries whose values come
// from rows of the truth dataset (so ground truth is never empty), runs both
// ranked-id callbacks against whatever data they close over, and judges
// relevance by membership in the truth-side match set.
QueryEval evaluate_queries(const RankedIdsFn& system, const RankedIdsFn& baseline,
                           const Dataset& truth, int num_queries, int k, std::uint64_t seed);

}  // namespace probwipe
