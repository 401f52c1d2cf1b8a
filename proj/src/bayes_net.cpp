#include "probwipe/bayes_net.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <stdexcept>

namespace probwipe {

namespace {

// Dense factor over a sorted scope of attribute indices.
struct Factor {
  std::vector<int> scope;  // ascending attribute indices
  std::vector<int> card;   // domain sizes, parallel to scope
  std::vector<double> vals;  // mixed-radix layout, first scope var slowest

  std::size_t index_of(const std::vector<int>& full_codes) const {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < scope.size(); ++i) idx = idx * card[i] + full_codes[scope[i]];
    return idx;
  }
};

Factor multiply(const Factor& a, const Factor& b, const std::vector<int>& domain_sizes) {
  Factor out;
  std::set_union(a.scope.begin(), a.scope.end(), b.scope.begin(), b.scope.end(),
                 std::back_inserter(out.scope));
  std::size_t total = 1;
  for (int v : out.scope) {
    out.card.push_back(domain_sizes[v]);
    total *= domain_sizes[v];
  }
  out.vals.assign(total, 0.0);

  std::vector<int> codes(domain_sizes.size(), 0);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rem = idx;
    for (std::size_t i = out.scope.size(); i-- > 0;) {
      codes[out.scope[i]] = static_cast<int>(rem % out.card[i]);
      rem /= out.card[i];
    }
    out.vals[idx] = a.vals[a.index_of(codes)] * b.vals[b.index_of(codes)];
  }
  return out;
}

Factor sum_out(const Factor& f, int var, const std::vector<int>& domain_sizes) {
  Factor out;
  for (std::size_t i = 0; i < f.scope.size(); ++i)
    if (f.scope[i] != var) out.scope.push_back(f.scope[i]);
  std::size_t total = 1;
  for (int v : out.scope) {
    out.card.push_back(domain_sizes[v]);
    total *= domain_sizes[v];
  }
  out.vals.assign(total, 0.0);

  std::vector<int> codes(domain_sizes.size(), 0);
  std::size_t in_total = f.vals.size();
  for (std::size_t idx = 0; idx < in_total; ++idx) {
    std::size_t rem = idx;
    for (std::size_t i = f.scope.size(); i-- > 0;) {
      codes[f.scope[i]] = static_cast<int>(rem % f.card[i]);
      rem /= f.card[i];
    }
    out.vals[out.index_of(codes)] += f.vals[idx];
  }
  return out;
}

}  // namespace

ValuePooling pool_attribute(const Dataset& d, int attr) {
  const auto& dom = d.schema.domains[attr];
  const auto floor = static_cast<std::int64_t>(d.rows.size() / 1000);
  std::vector<std::int64_t> counts(dom.size(), 0);
  for (const auto& row : d.rows) {
    const int c = d.schema.value_index(attr, row.values[attr]);
    if (c >= 0) ++counts[c];
  }

  ValuePooling out;
  out.code.assign(dom.size(), -1);
  int next = 0;
  bool any_pooled = false;
  for (std::size_t i = 0; i < dom.size(); ++i) {
    if (counts[i] >= floor) out.code[i] = next++; else any_pooled = true;
  }
  out.members.assign(static_cast<std::size_t>(next), 1);
  if (any_pooled) {
    int pooled_members = 0;
    for (auto& c : out.code)
      if (c < 0) {
        c = next;
        ++pooled_members;
      }
    out.members.push_back(pooled_members);
  }
  return out;
}

std::vector<std::vector<int>> BayesNet::children() const {
  std::vector<std::vector<int>> ch(parents_.size());
  for (std::size_t v = 0; v < parents_.size(); ++v)
    for (int p : parents_[v]) ch[p].push_back(static_cast<int>(v));
  return ch;
}

std::uint64_t BayesNet::combo_index(int node, const std::vector<int>& pooled_codes) const {
  std::uint64_t combo = 0;
  for (int p : parents_[node])
    combo = combo * static_cast<std::uint64_t>(pooling_[p].size()) +
            static_cast<std::uint64_t>(pooled_codes[p]);
  return combo;
}

double BayesNet::pooled_family_prob(int node, int pooled_value,
                                    const std::vector<int>& pooled_codes) const {
  const auto& fam = families_[node];
  const auto dom = static_cast<std::uint64_t>(pooling_[node].size());
  const std::uint64_t combo = combo_index(node, pooled_codes);

  std::int64_t total = 0;
  if (auto it = fam.combo_total.find(combo); it != fam.combo_total.end()) total = it->second;
  std::int64_t count = 0;
  const std::uint64_t key = combo * dom + static_cast<std::uint64_t>(pooled_value);
  if (auto it = fam.joint.find(key); it != fam.joint.end()) count = it->second;

  return (static_cast<double>(count) + alpha_) /
         (static_cast<double>(total) + alpha_ * static_cast<double>(dom));
}

double BayesNet::cpt_prob(int node, int value_code, const std::vector<int>& full_codes) const {
  std::vector<int> pooled(full_codes.size(), 0);
  for (int p : parents_[node]) pooled[p] = pooling_[p].code[full_codes[p]];
  const int pv = pooling_[node].code[value_code];
  return pooled_family_prob(node, pv, pooled) / pooling_[node].members[pv];
}

double BayesNet::joint_prob(const Tuple& t) const {
  const std::size_t m = schema_.size();
  if (t.values.size() != m) throw std::invalid_argument("joint_prob: tuple arity mismatch");
  std::vector<int> pooled(m);
  std::vector<double> share(m);
  for (std::size_t i = 0; i < m; ++i) {
    const int c = schema_.value_index(i, t.values[i]);
    if (c < 0)
      throw std::domain_error("joint_prob: value '" + t.values[i] + "' not in domain of " +
                              schema_.attributes[i]);
    pooled[i] = pooling_[i].code[c];
    share[i] = 1.0 / pooling_[i].members[pooled[i]];
  }
  double p = 1.0;
  for (std::size_t node = 0; node < m; ++node)
    p *= pooled_family_prob(static_cast<int>(node), pooled[node], pooled) * share[node];
  return p;
}

std::vector<double> BayesNet::posterior(int target, const Evidence& evidence) const {
  const std::size_t m = schema_.size();
  if (target < 0 || static_cast<std::size_t>(target) >= m)
    throw std::invalid_argument("posterior: bad target attribute");

  // The elimination runs over pooled codes; a pooled bucket is one state
  // whose mass is spread back over its members at the end. Evidence on a
  // bucket member conditions on the bucket, and the within-bucket share is
  // a constant factor that cancels in the normalization.
  std::vector<int> fixed(m, -1);
  for (const auto& [attr, value] : evidence.bindings) {
    if (attr < 0 || static_cast<std::size_t>(attr) >= m)
      throw std::invalid_argument("posterior: bad evidence attribute");
    if (attr == target) throw std::invalid_argument("posterior: target is bound in evidence");
    const int c = schema_.value_index(attr, value);
    if (c < 0)
      throw std::domain_error("posterior: value '" + value + "' not in domain of " +
                              schema_.attributes[attr]);
    fixed[attr] = pooling_[attr].code[c];
  }

  std::vector<int> domain_sizes(m);
  for (std::size_t i = 0; i < m; ++i) {
    domain_sizes[i] = pooling_[i].size();
    if (domain_sizes[i] == 0) throw std::domain_error("posterior: empty domain");
  }

  // One factor per node: the CPT restricted by the evidence.
  std::vector<Factor> factors;
  std::vector<int> codes(m, 0);
  for (std::size_t node = 0; node < m; ++node) {
    Factor f;
    std::vector<int> fam = parents_[node];
    fam.push_back(static_cast<int>(node));
    std::sort(fam.begin(), fam.end());
    for (int v : fam)
      if (fixed[v] < 0) {
        f.scope.push_back(v);
        f.card.push_back(domain_sizes[v]);
      }
    std::size_t total = 1;
    for (int c : f.card) total *= c;
    f.vals.assign(total, 0.0);
    for (std::size_t idx = 0; idx < total; ++idx) {
      std::size_t rem = idx;
      for (std::size_t i = f.scope.size(); i-- > 0;) {
        codes[f.scope[i]] = static_cast<int>(rem % f.card[i]);
        rem /= f.card[i];
      }
      for (std::size_t i = 0; i < m; ++i)
        if (fixed[i] >= 0) codes[i] = fixed[i];
      f.vals[idx] = pooled_family_prob(static_cast<int>(node), codes[node], codes);
    }
    factors.push_back(std::move(f));
  }

  // Eliminate everything except the target, min-degree first, ties by index.
  std::vector<int> to_eliminate;
  for (std::size_t i = 0; i < m; ++i)
    if (static_cast<int>(i) != target && fixed[i] < 0) to_eliminate.push_back(static_cast<int>(i));

  while (!to_eliminate.empty()) {
    int best = -1;
    std::size_t best_size = 0;
    for (int var : to_eliminate) {
      std::set<int> joined;
      for (const auto& f : factors)
        if (std::find(f.scope.begin(), f.scope.end(), var) != f.scope.end())
          joined.insert(f.scope.begin(), f.scope.end());
      std::size_t size = 1;
      for (int v : joined) size *= domain_sizes[v];
      if (best < 0 || size < best_size) {
        best = var;
        best_size = size;
      }
    }

    std::vector<Factor> rest;
    Factor merged;
    bool have = false;
    for (auto& f : factors) {
      if (std::find(f.scope.begin(), f.scope.end(), best) != f.scope.end()) {
        merged = have ? multiply(merged, f, domain_sizes) : std::move(f);
        have = true;
      } else {
        rest.push_back(std::move(f));
      }
    }
    if (have) rest.push_back(sum_out(merged, best, domain_sizes));
    factors = std::move(rest);
    to_eliminate.erase(std::find(to_eliminate.begin(), to_eliminate.end(), best));
  }

  Factor result;
  result.scope = {target};
  result.card = {domain_sizes[target]};
  result.vals.assign(domain_sizes[target], 1.0);
  for (const auto& f : factors) result = multiply(result, f, domain_sizes);

  double z = 0.0;
  for (double v : result.vals) z += v;
  if (!(z > 0.0)) throw std::domain_error("posterior: zero evidence mass");

  const auto& pool = pooling_[target];
  std::vector<double> full(schema_.domains[target].size());
  for (std::size_t v = 0; v < full.size(); ++v) {
    const int pv = pool.code[v];
    full[v] = result.vals[pv] / (z * pool.members[pv]);
  }
  return full;
}

double BayesNet::evidence_prob(const Evidence& evidence) const {
  if (evidence.bindings.empty()) return 1.0;
  // Marginalize the joint down to the evidence by eliminating all unbound
  // attributes; reuse posterior() against one bound attribute's sliced net is
  // messier than just running the same elimination with an empty keep-set, so
  // do the direct thing: pick any bound attribute as the "target" view.
  const auto& [attr0, value0] = evidence.bindings[0];
  Evidence rest;
  for (std::size_t i = 1; i < evidence.bindings.size(); ++i)
    rest.bindings.push_back(evidence.bindings[i]);
  // P(e) = P(rest) * P(attr0 = value0 | rest); recurse via posterior.
  const int c = schema_.value_index(attr0, value0);
  if (c < 0)
    throw std::domain_error("evidence_prob: value '" + value0 + "' not in domain of " +
                            schema_.attributes[attr0]);
  const std::vector<double> post = posterior(attr0, rest);
  return evidence_prob(rest) * post[c];
}

std::vector<int> BayesNet::markov_blanket(int node) const {
  const auto ch = children();
  std::set<int> blanket(parents_[node].begin(), parents_[node].end());
  for (int c : ch[node]) {
    blanket.insert(c);
    for (int other : parents_[c])
      if (other != node) blanket.insert(other);
  }
  blanket.erase(node);
  return {blanket.begin(), blanket.end()};
}

void BayesNet::check_acyclic() const {
  const std::size_t m = parents_.size();
  std::vector<int> state(m, 0);  // 0 unvisited, 1 on stack, 2 done
  std::function<void(int)> visit = [&](int v) {
    state[v] = 1;
    for (int p : parents_[v]) {
      if (state[p] == 1) throw std::invalid_argument("bayes net: parent graph has a cycle");
      if (state[p] == 0) visit(p);
    }
    state[v] = 2;
  };
  for (std::size_t v = 0; v < m; ++v)
    if (state[v] == 0) visit(static_cast<int>(v));
}

BayesNet fit_cpts(const Dataset& d, const std::vector<std::vector<int>>& dag, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("fit_cpts: alpha must be positive");
  const std::size_t m = d.schema.size();
  if (dag.size() != m) throw std::invalid_argument("fit_cpts: parent list arity mismatch");

  BayesNet bn;
  bn.schema_ = d.schema;
  bn.parents_ = dag;
  for (auto& ps : bn.parents_) std::sort(ps.begin(), ps.end());
  bn.alpha_ = alpha;
  bn.families_.resize(m);
  bn.check_acyclic();
  bn.pooling_.reserve(m);
  for (std::size_t i = 0; i < m; ++i) bn.pooling_.push_back(pool_attribute(d, static_cast<int>(i)));

  std::vector<int> codes(m);
  for (const auto& row : d.rows) {
    for (std::size_t i = 0; i < m; ++i) {
      const int c = d.schema.value_index(i, row.values[i]);
      codes[i] = c < 0 ? -1 : bn.pooling_[i].code[c];
    }
    for (std::size_t node = 0; node < m; ++node) {
      if (codes[node] < 0) continue;
      bool usable = true;
      for (int p : bn.parents_[node])
        if (codes[p] < 0) {
          usable = false;
          break;
        }
      if (!usable) continue;
      const std::uint64_t combo = bn.combo_index(static_cast<int>(node), codes);
      auto& fam = bn.families_[node];
      fam.combo_total[combo] += 1;
      fam.joint[combo * static_cast<std::uint64_t>(bn.pooling_[node].size()) + codes[node]] += 1;
    }
  }
  return bn;
}

BayesNet assemble_net(Schema schema, std::vector<std::vector<int>> parents,
                      std::vector<std::vector<int>> pooled_codes,
                      std::vector<BayesNet::Family> families, double alpha) {
  BayesNet bn;
  bn.schema_ = std::move(schema);
  bn.parents_ = std::move(parents);
  bn.families_ = std::move(families);
  bn.alpha_ = alpha;
  const std::size_t m = bn.schema_.size();
  if (bn.parents_.size() != m || bn.families_.size() != m || pooled_codes.size() != m)
    throw DataError("bayes net: inconsistent serialized sizes");
  bn.check_acyclic();

  for (std::size_t i = 0; i < m; ++i) {
    ValuePooling pool;
    pool.code = std::move(pooled_codes[i]);
    if (pool.code.size() != bn.schema_.domains[i].size())
      throw DataError("bayes net: pooled code map does not cover the domain");
    int top = -1;
    for (int c : pool.code) {
      if (c < 0) throw DataError("bayes net: negative pooled code");
      top = std::max(top, c);
    }
    pool.members.assign(static_cast<std::size_t>(top + 1), 0);
    for (int c : pool.code) ++pool.members[c];
    for (int count : pool.members)
      if (count == 0) throw DataError("bayes net: unused pooled code");
    bn.pooling_.push_back(std::move(pool));
  }
  return bn;
}

}  // namespace probwipe
