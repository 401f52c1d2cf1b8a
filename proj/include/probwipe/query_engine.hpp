#pragma once

#include <string>
#include <vector>

#include "probwipe/cleaner.hpp"
#include "probwipe/error_model.hpp"

namespace probwipe {

// Conjunctive equality query: at most one constraint per attribute, kept
// sorted by attribute index.
struct Query {
  std::vector<std::pair<int, std::string>> constraints;

  std::size_t size() const { return constraints.size(); }
  bool constrains(int attr) const;
  const std::string* value_of(int attr) const;
  std::string key() const;  // canonical form for dedup
};

// Validates names and the one-constraint-per-attribute rule against a schema.
Query make_query(const Schema& schema,
                 const std::vector<std::pair<std::string, std::string>>& constraints);

bool satisfies(const Tuple& t, const Query& q);

// Exact-match scan in row order. Empty queries are refused.
std::vector<Tuple> baseline_select(const Query& q, const Dataset& d);

// Relevance of a possibly-dirty tuple to the query: sum over its repair
// candidates of prior * normalized error weight, counting only candidates
// that satisfy every constraint.
double score_tuple(const Tuple& t, const Query& q, const TupleScorer& scorer);

// Best-first completion of q toward target_size constraints, expanding each
// node with the `beam` highest-posterior (attribute, value) bindings drawn
// from the Markov blanket of the bound attributes, prioritized by
// Pr(bindings)^(m/p). Returns up to num_esqs completed (or dead-ended)
// queries, the original query included if it already meets the target.
std::vector<Query> expand(const Query& q, const BayesNet& bn, int beam, int num_esqs,
                          int target_size);

struct RankedQuery {
  Query query;
  double expected_relevance;
};

// All non-empty constraint subsets of esq, ranked by the product over every
// attribute of: 1 if kept, the value's retention rate if dropped from esq,
// the attribute's mean retention if esq never constrained it.
std::vector<RankedQuery> relax_and_rank(const Query& esq, const ErrorStats& stats,
                                        std::size_t num_attrs);

struct ScoredResult {
  Tuple tuple;
  double score;
};

struct AnswerOptions {
  int k = 10;
  double confidence = 0.9;  // 0 disables early stopping
  int beam = 4;
  int esq_count = 3;
  int target_size = 0;  // 0 = all attributes
};

// Full pipeline: run q, then its expansions, then relaxations in relevance
// order; stop once the estimated chance that the next query still improves on
// the current k-th score falls below `confidence`. Scores each retrieved row
// once; returns the k best with positive score.
std::vector<ScoredResult> answer(const Query& q, const Dataset& dirty, const TupleScorer& scorer,
                                 const ErrorStats& stats, const AnswerOptions& opt);

}  // namespace probwipe
