#pragma once

#include <cstdint>
#include <string>

namespace probwipe {

// Engine-wide knobs. Defaults are the tuned operating point; everything is
// overridable from the CLI, and the values used for learning are frozen into
// the model artifact so later commands replay them.
struct Config {
  double sample_fraction = 1.0;  // fraction of input rows used for learning
  int j = 3;                     // candidate radius: keep candidates within j differing cells
  double gamma = 5.8;            // error-weight sharpness
  double delta = 0.638;          // edit-distance vs distributional feature balance
  double mu = 0.1;               // distributional smoothing
  double alpha = 1.0;            // CPT Laplace smoothing
  int max_parents = 2;
  int restarts = 3;              // structure-search random restarts
  int beam = 4;                  // expansion fan-out per search node
  int esq_count = 3;             // expanded queries to execute
  int esq_target_size = 0;       // 0 = expand to the full attribute count
  double confidence = 0.9;       // top-k stop-rule threshold; 0 disables early stop
  int k = 10;
  std::uint64_t seed = 1;

  void validate() const;  // throws std::invalid_argument on out-of-range values
};

// PROBWIPE_SEED, when set to a parseable integer, wins over any configured seed.
std::uint64_t seed_from_env(std::uint64_t fallback);

}  // namespace probwipe
