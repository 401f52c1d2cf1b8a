#pragma once

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "probwipe/bayes_net.hpp"
#include "probwipe/candidate_index.hpp"
#include "probwipe/error_model.hpp"

namespace probwipe {

struct CleanedTuple {
  std::int64_t original_id = 0;
  // (candidate, normalized probability), best first. Ties prefer the original
  // tuple, then lexicographic value order.
  std::vector<std::pair<Tuple, double>> alternatives;
  bool uncleanable = false;

  const Tuple& chosen() const { return alternatives.front().first; }
};

struct Pdb {
  Schema schema;
  std::vector<CleanedTuple> rows;
};

// Scores (observed, candidate) pairs as prior * exp(gamma * feature_sum) and
// assembles per-tuple repair distributions. The same pair arithmetic backs the
// single-node cleaner, the query scorer, and the sharded pipeline, which is
// what makes their outputs agree bit for bit. Feature sums are cached per
// (attribute, observed value, candidate value); the cache is shared across
// copies, so with_gamma() reuses it.
class TupleScorer {
 public:
  TupleScorer(const BayesNet& bn, const ErrorContext& ctx, const ErrorParams& params,
              const CandidateIndex& idx);

  const BayesNet& bn() const { return *bn_; }
  const CandidateIndex& index() const { return *idx_; }
  const ErrorContext& context() const { return *ctx_; }
  const ErrorParams& params() const { return params_; }
  TupleScorer with_gamma(double gamma) const;

  // exp(gamma * feature_sum(observed, candidate)); strictly positive.
  double weight(const Tuple& observed, const Tuple& candidate) const;
  // Cached joint probability of the candidate under the source model.
  double prior(const Tuple& candidate) const;
  // prior * weight: the unnormalized repair score of one pair.
  double pair_score(const Tuple& observed, const Tuple& candidate) const;

  // Candidate pool actually scored for t: fully specified pool tuples within
  // j differing cells, plus t itself when t is fully specified, in-domain,
  // and not already present.
  std::vector<Tuple> scorable_candidates(const Tuple& t) const;

  CleanedTuple clean_tuple(const Tuple& t) const;

 private:
  const BayesNet* bn_;
  const ErrorContext* ctx_;
  ErrorParams params_;
  const CandidateIndex* idx_;

  struct Cache {
    // per attribute: observed '\x1f' candidate -> feature pair sum
    std::vector<std::unordered_map<std::string, std::pair<double, double>>> features;
    std::unordered_map<std::string, double> priors;
  };
  std::shared_ptr<Cache> cache_;
};

// True when a beats b under the repair ordering for observed tuple t.
bool repair_order(double score_a, const Tuple& a, double score_b, const Tuple& b, const Tuple& t);

Dataset clean_dataset(const Dataset& d, const TupleScorer& scorer);
Pdb clean_dataset_pdb(const Dataset& d, const TupleScorer& scorer);

// Keep alternatives with probability strictly above p.
Dataset determinize_threshold(const Pdb& pdb, double p);
// Keep the k most probable alternatives per row.
Dataset determinize_topk(const Pdb& pdb, int k);

// One JSON object per input row: {"original_id": ..., "alternatives":
// [{"values": [...], "p": 0.123456}, ...]} with probabilities fixed to six
// decimals.
void save_pdb_jsonl(const Pdb& pdb, const std::string& path);
Pdb load_pdb_jsonl(const std::string& path, const Schema& schema);

// Bisect gamma until the fraction of rows the cleaner modifies lands near the
// expected noise fraction; the fraction is non-increasing in gamma. Evaluates
// on at most max_rows rows of d.
double calibrate_gamma(const Dataset& d, const TupleScorer& scorer,
                       double target_modified_fraction, std::size_t max_rows = 2000);

}  // namespace probwipe
