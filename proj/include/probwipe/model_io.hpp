#pragma once

#include <memory>
#include <string>

#include "probwipe/bayes_net.hpp"
#include "probwipe/candidate_index.hpp"
#include "probwipe/cleaner.hpp"
#include "probwipe/config.hpp"
#include "probwipe/error_model.hpp"

namespace probwipe {

inline constexpr int kModelVersion = 1;

// Everything a later invocation needs to reproduce the learned state: the
// configuration the models were learned under, the learning sample itself
// (co-occurrence tables and the candidate index are cheap to rebuild from it
// and are not persisted), the source model, and the retention statistics.
struct ModelArtifact {
  Config config;
  Dataset sample;
  BayesNet bn;
  ErrorStats stats;
};

// Deterministic layout: the same artifact serializes to identical bytes.
void save_model(const ModelArtifact& artifact, const std::string& path);
std::string model_to_json_text(const ModelArtifact& artifact);
// Rejects any artifact whose version field differs from kModelVersion.
ModelArtifact load_model(const std::string& path);

// Learned state plus the rebuilt per-sample structures, ready to score.
// The scorer holds pointers into `artifact`, so a moved Runtime would leave
// them dangling; keep it where it was built, or on the heap via make_unique.
struct Runtime {
  ModelArtifact artifact;
  std::unique_ptr<ErrorContext> ctx;
  std::unique_ptr<CandidateIndex> idx;
  std::unique_ptr<TupleScorer> scorer;

  explicit Runtime(ModelArtifact a);
  Runtime(Runtime&&) = delete;
  Runtime& operator=(Runtime&&) = delete;
};

Runtime build_runtime(ModelArtifact artifact);

// sample -> structure search -> CPTs -> candidate index -> retention
// bootstrap via self-cleaning. The config's seed drives both the sampling and
// the structure search.
ModelArtifact learn_models(const Dataset& input, const Config& config);

}  // namespace probwipe
