#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "probwipe/cleaner.hpp"

namespace probwipe {

// FNV-1a, 64-bit, over raw bytes.
std::uint64_t fnv1a64(std::string_view bytes);

// Shard owning the posting "attr=value".
int shard_of(const std::string& attr_name, const std::string& value, int num_shards);

// Per-shard slice of the candidate index postings; slot layout mirrors
// CandidateIndex::indexed_attrs().
struct IndexFragment {
  std::vector<std::map<std::string, std::vector<int>>> postings;
};

std::vector<IndexFragment> partition_index(const CandidateIndex& idx, const Schema& schema,
                                           int num_shards);

// One scored (input tuple, candidate) pair produced by a shard. score is the
// unnormalized pair score; softmax normalization is shift-free across shards,
// so the stage-2 argmax matches single-node cleaning without any shard seeing
// the full candidate set.
struct Emission {
  std::int64_t tuple_id;
  int candidate;  // distinct-tuple index
  double score;
};

struct ShardMetrics {
  int num_shards = 1;
  std::vector<std::int64_t> per_shard_index_bytes;
  std::int64_t max_index_bytes = 0;
  std::int64_t stage1_emitted_pairs = 0;
  std::map<std::size_t, std::int64_t> stage2_group_sizes;  // group size -> tuples
};

// Map stage: every tuple emits one (attr=value) routing pair per non-missing
// indexed attribute; the owning shard filters its local postings to candidates
// within j differing cells and scores them. A candidate reachable through two
// keys on the same shard is emitted once there; cross-shard duplicates are
// dropped in stage 2.
std::vector<Emission> run_stage1(const Dataset& dirty, const CandidateIndex& idx,
                                 const std::vector<IndexFragment>& fragments,
                                 const TupleScorer& scorer, std::int64_t* emitted_pairs);

// Reduce stage: group by tuple id, deduplicate, inject the unchanged-tuple
// candidate where the single-node cleaner would, renormalize, and keep the
// argmax under the cleaner's tie-breaking. Tuples with no pairs pass through
// unchanged.
Dataset run_stage2(const Dataset& dirty, const CandidateIndex& idx,
                   const std::vector<Emission>& pairs, const TupleScorer& scorer,
                   ShardMetrics* metrics);

// Index-size accounting without running the pipeline: per shard, the sum over
// owned postings of strlen("attr=value") + 8 bytes per posted id.
ShardMetrics measure(const CandidateIndex& idx, const Schema& schema, const Dataset& dirty,
                     int num_shards);

// partition + stage 1 + stage 2.
Dataset run_sharded_clean(const Dataset& dirty, const CandidateIndex& idx,
                          const TupleScorer& scorer, int num_shards, ShardMetrics* metrics);

}  // namespace probwipe
