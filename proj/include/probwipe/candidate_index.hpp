#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "probwipe/dataset.hpp"

namespace probwipe {

// Inverted indexes over the j+1 attributes with the most distinct observed
// values in the sample (ties broken by attribute order). Any candidate within
// j differing cells of a probe must agree with it on at least one indexed
// attribute, so the union of the matching postings is a complete candidate
// pool; postings cover the deduplicated sample tuples.
class CandidateIndex {
 public:
  CandidateIndex(const Dataset& sample, int j);

  int j() const { return j_; }
  const std::vector<int>& indexed_attrs() const { return indexed_attrs_; }
  const std::vector<Tuple>& distinct_tuples() const { return distinct_; }
  // value -> ascending distinct-tuple indices, for the slot-th indexed attribute
  const std::unordered_map<std::string, std::vector<int>>& postings(std::size_t slot) const {
    return postings_[slot];
  }

  // Cells where the probe differs from the candidate; a missing probe value
  // counts as differing no matter what the candidate holds.
  static int diff_count(const Tuple& probe, const Tuple& candidate);

  // Ascending distinct-tuple indices within j differing cells of t. Falls back
  // to a full scan when every indexed value of t is missing.
  std::vector<int> candidate_ids(const Tuple& t) const;
  std::vector<Tuple> candidates(const Tuple& t) const;

 private:
  int j_;
  std::size_t arity_;
  std::vector<int> indexed_attrs_;
  std::vector<Tuple> distinct_;
  std::vector<std::unordered_map<std::string, std::vector<int>>> postings_;
};

}  // namespace probwipe
