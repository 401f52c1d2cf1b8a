#include "probwipe/candidate_index.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>

namespace probwipe {

CandidateIndex::CandidateIndex(const Dataset& sample, int j) : j_(j), arity_(sample.schema.size()) {
  if (j < 0) throw std::invalid_argument("CandidateIndex: j must be non-negative");
  const std::size_t m = sample.schema.size();
  if (static_cast<std::size_t>(j) + 1 > m)
    throw std::invalid_argument("CandidateIndex: j + 1 indexes need j + 1 <= attribute count");

  // Cardinality observed in the sample rows (not the inherited schema, which
  // may carry values the sample never saw).
  std::vector<std::set<std::string>> observed(m);
  for (const auto& row : sample.rows)
    for (std::size_t i = 0; i < m; ++i)
      if (!is_missing(row.values[i])) observed[i].insert(row.values[i]);

  std::vector<int> order(m);
  for (std::size_t i = 0; i < m; ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return observed[a].size() > observed[b].size(); });
  indexed_attrs_.assign(order.begin(), order.begin() + j + 1);
  std::sort(indexed_attrs_.begin(), indexed_attrs_.end());

  std::map<std::vector<std::string>, int> seen;
  for (const auto& row : sample.rows) {
    if (seen.emplace(row.values, static_cast<int>(distinct_.size())).second)
      distinct_.push_back(row);  // keeps the first occurrence's id
  }

  postings_.resize(indexed_attrs_.size());
  for (std::size_t d = 0; d < distinct_.size(); ++d) {
    for (std::size_t s = 0; s < indexed_attrs_.size(); ++s) {
      const auto& v = distinct_[d].values[indexed_attrs_[s]];
      if (!is_missing(v)) postings_[s][v].push_back(static_cast<int>(d));
    }
  }
}

int CandidateIndex::diff_count(const Tuple& probe, const Tuple& candidate) {
  int diff = 0;
  for (std::size_t i = 0; i < probe.values.size(); ++i)
    if (is_missing(probe.values[i]) || probe.values[i] != candidate.values[i]) ++diff;
  return diff;
}

std::vector<int> CandidateIndex::candidate_ids(const Tuple& t) const {
  if (t.values.size() != arity_)
    throw std::invalid_argument("CandidateIndex: probe arity mismatch");
  bool any_indexed = false;
  std::vector<char> hit(distinct_.size(), 0);
  std::vector<int> pool;
  for (std::size_t s = 0; s < indexed_attrs_.size(); ++s) {
    const auto& v = t.values[indexed_attrs_[s]];
    if (is_missing(v)) continue;
    any_indexed = true;
    auto it = postings_[s].find(v);
    if (it == postings_[s].end()) continue;
    for (int d : it->second) {
      if (!hit[d]) {
        hit[d] = 1;
        pool.push_back(d);
      }
    }
  }
  if (!any_indexed) {
    pool.resize(distinct_.size());
    for (std::size_t d = 0; d < distinct_.size(); ++d) pool[d] = static_cast<int>(d);
  }

  std::vector<int> out;
  for (int d : pool)
    if (diff_count(t, distinct_[d]) <= j_) out.push_back(d);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Tuple> CandidateIndex::candidates(const Tuple& t) const {
  std::vector<Tuple> out;
  for (int d : candidate_ids(t)) out.push_back(distinct_[d]);
  return out;
}

}  // namespace probwipe
