#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "probwipe/dataset.hpp"

namespace probwipe {

// (attribute index, value) bindings, at most one per attribute.
struct Evidence {
  std::vector<std::pair<int, std::string>> bindings;
};

// Coarsening of one attribute's domain: values observed in fewer than 0.1%
// of rows (so nothing pools below 2000 rows) share a single trailing pooled
// code, everything else keeps its own. Noisy data inflates domains with
// near-unique corrupted strings; pooling them keeps table cardinalities at
// the size of the genuinely supported domain.
struct ValuePooling {
  std::vector<int> code;     // full domain code -> pooled code
  std::vector<int> members;  // pooled code -> number of full codes mapped to it
  int size() const { return static_cast<int>(members.size()); }
};

ValuePooling pool_attribute(const Dataset& d, int attr);

// Discrete Bayes network over the attributes of a schema. Each attribute's
// domain is coarsened by pool_attribute at fit time; CPTs are kept as sparse
// family counts over pooled codes and Laplace-smoothed on lookup:
//   P(b | pa) = (count(pa, b) + alpha) / (count(pa) + alpha * |pooled dom|)
// with a pooled bucket's mass split uniformly among its member values, so
// every in-domain value has strictly positive probability, the per-attribute
// distributions still sum to one exactly, and a parent combination never
// seen in the data falls back to the uniform 1/|pooled dom|.
class BayesNet {
 public:
  BayesNet() = default;

  const Schema& schema() const { return schema_; }
  const std::vector<std::vector<int>>& parents() const { return parents_; }
  std::vector<std::vector<int>> children() const;
  double alpha() const { return alpha_; }
  const std::vector<ValuePooling>& value_pooling() const { return pooling_; }

  // P(value-code | parent codes taken from full_codes). full_codes holds one
  // domain code per attribute; only the node's parents are read.
  double cpt_prob(int node, int value_code, const std::vector<int>& full_codes) const;

  // Product of the per-node conditionals. t must be fully specified; an
  // out-of-domain value raises std::domain_error, so callers restrict
  // candidates to domain values first.
  double joint_prob(const Tuple& t) const;

  // Exact posterior over the target's domain given evidence, by variable
  // elimination. Target must not be bound in the evidence.
  std::vector<double> posterior(int target, const Evidence& evidence) const;

  // Marginal probability of the evidence itself.
  double evidence_prob(const Evidence& evidence) const;

  // Parents, children, and the children's other parents.
  std::vector<int> markov_blanket(int node) const;

  // Serialization hooks (model_io owns the JSON layout).
  struct Family {
    // key = parent-combination index * |pooled dom(node)| + pooled value code
    std::unordered_map<std::uint64_t, std::int64_t> joint;
    std::unordered_map<std::uint64_t, std::int64_t> combo_total;
  };
  const std::vector<Family>& families() const { return families_; }

  friend BayesNet fit_cpts(const Dataset& d, const std::vector<std::vector<int>>& dag,
                           double alpha);
  friend BayesNet assemble_net(Schema schema, std::vector<std::vector<int>> parents,
                               std::vector<std::vector<int>> pooled_codes,
                               std::vector<Family> families, double alpha);

 private:
  std::uint64_t combo_index(int node, const std::vector<int>& pooled_codes) const;
  double pooled_family_prob(int node, int pooled_value, const std::vector<int>& pooled_codes) const;
  void check_acyclic() const;

  Schema schema_;
  std::vector<std::vector<int>> parents_;
  std::vector<ValuePooling> pooling_;
  std::vector<Family> families_;
  double alpha_ = 1.0;
};

// Counts each node's family over the rows of d (through the pooled codes),
// skipping any row with a missing value in the node or one of its parents.
// dag is a parent list per attribute and must be acyclic.
BayesNet fit_cpts(const Dataset& d, const std::vector<std::vector<int>>& dag, double alpha);

// Rebuild a net from serialized parts (validates shapes, the pooled-code
// maps, and acyclicity). pooled_codes is one full-code-to-pooled-code map
// per attribute, as ValuePooling::code; member counts are recomputed.
BayesNet assemble_net(Schema schema, std::vector<std::vector<int>> parents,
                      std::vector<std::vector<int>> pooled_codes,
                      std::vector<BayesNet::Family> families, double alpha);

// Greedy hill climbing over add/remove/reverse single-edge moves, scored by
// BIC, with random restarts. Restart 0 starts from the empty graph; later
// restarts from random DAGs drawn from the seed. Deterministic for a fixed
// seed. Returns the best-scoring parent list found.
std::vector<std::vector<int>> learn_structure(const Dataset& d, int max_parents, int restarts,
                                              std::uint64_t seed);

// Decomposed BIC of one family under the rows of d (max-likelihood term minus
// 0.5 * log(N) * free parameters, over rows where node and parents are all
// observed), computed over the same pooled codes fit_cpts uses, so noise
// debris neither inflates the penalty's cardinalities nor fakes deterministic
// fits through near-unique parent combinations. Exposed for the
// structure-search tests.
double family_bic(const Dataset& d, int node, const std::vector<int>& parents);

}  // namespace probwipe
