#include "probwipe/shard_sim.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace probwipe {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

int shard_of(const std::string& attr_name, const std::string& value, int num_shards) {
  std::string key = attr_name;
  key.push_back('=');
  key += value;
  return static_cast<int>(fnv1a64(key) % static_cast<std::uint64_t>(num_shards));
}

std::vector<IndexFragment> partition_index(const CandidateIndex& idx, const Schema& schema,
                                           int num_shards) {
  if (num_shards < 1) throw std::invalid_argument("partition_index: num_shards must be >= 1");
  std::vector<IndexFragment> frags(num_shards);
  const auto& attrs = idx.indexed_attrs();
  for (auto& f : frags) f.postings.resize(attrs.size());
  for (std::size_t slot = 0; slot < attrs.size(); ++slot) {
    const std::string& name = schema.attributes[attrs[slot]];
    for (const auto& [value, ids] : idx.postings(slot)) {
      const int s = shard_of(name, value, num_shards);
      frags[s].postings[slot][value] = ids;
    }
  }
  return frags;
}

std::vector<Emission> run_stage1(const Dataset& dirty, const CandidateIndex& idx,
                                 const std::vector<IndexFragment>& fragments,
                                 const TupleScorer& scorer, std::int64_t* emitted_pairs) {
  const auto& attrs = idx.indexed_attrs();
  const auto& distinct = idx.distinct_tuples();
  std::int64_t routed = 0;
  std::vector<Emission> out;

  // Shards run one after another; each sees only the keys hashed to it.
  for (std::size_t s = 0; s < fragments.size(); ++s) {
    const IndexFragment& frag = fragments[s];
    for (const auto& row : dirty.rows) {
      std::set<int> local;  // per-shard dedup of candidates reached via two keys
      for (std::size_t slot = 0; slot < attrs.size(); ++slot) {
        const std::string& v = row.values[attrs[slot]];
        if (is_missing(v)) continue;
        if (s == 0) ++routed;  // count each routing pair once, not per shard
        if (shard_of(dirty.schema.attributes[attrs[slot]], v,
                     static_cast<int>(fragments.size())) != static_cast<int>(s))
          continue;
        auto it = frag.postings[slot].find(v);
        if (it == frag.postings[slot].end()) continue;
        for (int d : it->second) {
          if (!distinct[d].fully_specified()) continue;
          if (CandidateIndex::diff_count(row, distinct[d]) > idx.j()) continue;
          if (!local.insert(d).second) continue;
          out.push_back({row.id, d, scorer.pair_score(row, distinct[d])});
        }
      }
    }
  }
  if (emitted_pairs) *emitted_pairs = routed;
  return out;
}

Dataset run_stage2(const Dataset& dirty, const CandidateIndex& idx,
                   const std::vector<Emission>& pairs, const TupleScorer& scorer,
                   ShardMetrics* metrics) {
  const auto& distinct = idx.distinct_tuples();
  std::map<std::int64_t, std::map<int, double>> groups;  // tuple id -> candidate -> score
  for (const auto& e : pairs) groups[e.tuple_id].emplace(e.candidate, e.score);

  Dataset out;
  out.schema.attributes = dirty.schema.attributes;
  out.rows.reserve(dirty.rows.size());
  for (const auto& row : dirty.rows) {
    const Tuple* best = nullptr;
    double best_score = 0.0;
    Tuple self;
    std::size_t group_size = 0;
    bool self_present = false;

    auto git = groups.find(row.id);
    if (git != groups.end()) {
      for (const auto& [d, score] : git->second) {
        const Tuple& cand = distinct[d];
        if (same_values(cand, row)) self_present = true;
        if (best == nullptr || repair_order(score, cand, best_score, *best, row)) {
          best = &cand;
          best_score = score;
        }
      }
      group_size = git->second.size();
    }
    // The reducer holds the original tuple, so the unchanged-tuple candidate
    // is added here rather than in the mappers.
    if (!self_present && row.fully_specified()) {
      const auto& schema = scorer.bn().schema();
      bool in_domain = true;
      for (std::size_t i = 0; i < schema.size() && in_domain; ++i)
        if (schema.value_index(i, row.values[i]) < 0) in_domain = false;
      if (in_domain) {
        self = row;
        const double score = scorer.pair_score(row, self);
        ++group_size;
        if (best == nullptr || repair_order(score, self, best_score, *best, row)) {
          best = &self;
          best_score = score;
        }
      }
    }

    Tuple chosen = best != nullptr ? *best : row;  // no candidates: pass through
    chosen.id = row.id;
    out.rows.push_back(std::move(chosen));
    if (metrics) metrics->stage2_group_sizes[group_size] += 1;
  }
  rebuild_domains(out);
  return out;
}

ShardMetrics measure(const CandidateIndex& idx, const Schema& schema, const Dataset& dirty,
                     int num_shards) {
  if (num_shards < 1) throw std::invalid_argument("measure: num_shards must be >= 1");
  ShardMetrics m;
  m.num_shards = num_shards;
  m.per_shard_index_bytes.assign(num_shards, 0);
  const auto& attrs = idx.indexed_attrs();
  for (std::size_t slot = 0; slot < attrs.size(); ++slot) {
    const std::string& name = schema.attributes[attrs[slot]];
    for (const auto& [value, ids] : idx.postings(slot)) {
      const int s = shard_of(name, value, num_shards);
      m.per_shard_index_bytes[s] += static_cast<std::int64_t>(name.size() + 1 + value.size()) +
                                    8 * static_cast<std::int64_t>(ids.size());
    }
  }
  m.max_index_bytes = *std::max_element(m.per_shard_index_bytes.begin(),
                                        m.per_shard_index_bytes.end());
  for (const auto& row : dirty.rows)
    for (int attr : attrs)
      if (!is_missing(row.values[attr])) ++m.stage1_emitted_pairs;
  return m;
}

Dataset run_sharded_clean(const Dataset& dirty, const CandidateIndex& idx,
                          const TupleScorer& scorer, int num_shards, ShardMetrics* metrics) {
  auto frags = partition_index(idx, dirty.schema, num_shards);
  std::int64_t routed = 0;
  auto pairs = run_stage1(dirty, idx, frags, scorer, &routed);
  if (metrics) {
    *metrics = measure(idx, dirty.schema, dirty, num_shards);
    metrics->stage2_group_sizes.clear();
  }
  Dataset cleaned = run_stage2(dirty, idx, pairs, scorer, metrics);
  if (metrics) metrics->stage1_emitted_pairs = routed;
  return cleaned;
}

}  // namespace probwipe
