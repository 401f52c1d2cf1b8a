#include "probwipe/query_engine.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <set>

namespace probwipe {

bool Query::constrains(int attr) const { return value_of(attr) != nullptr; }

const std::string* Query::value_of(int attr) const {
  for (const auto& [a, v] : constraints)
    if (a == attr) return &v;
  return nullptr;
}

std::string Query::key() const {
  std::string k;
  for (const auto& [a, v] : constraints) {
    k += std::to_string(a);
    k.push_back('=');
    k += v;
    k.push_back('\x1f');
  }
  return k;
}

Query make_query(const Schema& schema,
                 const std::vector<std::pair<std::string, std::string>>& constraints) {
  Query q;
  for (const auto& [name, value] : constraints) {
    const int attr = schema.attr_index(name);
    if (attr < 0) throw std::invalid_argument("query: unknown attribute '" + name + "'");
    if (q.constrains(attr))
      throw std::invalid_argument("query: attribute '" + name + "' constrained twice");
    if (is_missing(value))
      throw std::invalid_argument("query: empty value for attribute '" + name + "'");
    q.constraints.emplace_back(attr, value);
  }
  std::sort(q.constraints.begin(), q.constraints.end());
  return q;
}

bool satisfies(const Tuple& t, const Query& q) {
  for (const auto& [attr, value] : q.constraints)
    if (t.values[attr] != value) return false;
  return true;
}

std::vector<Tuple> baseline_select(const Query& q, const Dataset& d) {
  if (q.constraints.empty()) throw std::invalid_argument("baseline_select: empty query");
  std::vector<Tuple> out;
  for (const auto& row : d.rows)
    if (satisfies(row, q)) out.push_back(row);
  return out;
}

double score_tuple(const Tuple& t, const Query& q, const TupleScorer& scorer) {
  if (q.constraints.empty()) throw std::invalid_argument("score_tuple: empty query");
  const std::vector<Tuple> cands = scorer.scorable_candidates(t);
  if (cands.empty()) return 0.0;
  double z = 0.0;
  std::vector<double> w(cands.size());
  for (std::size_t i = 0; i < cands.size(); ++i) {
    w[i] = scorer.weight(t, cands[i]);
    z += w[i];
  }
  double score = 0.0;
  for (std::size_t i = 0; i < cands.size(); ++i)
    if (satisfies(cands[i], q)) score += scorer.prior(cands[i]) * (w[i] / z);
  return score;
}

namespace {

Evidence to_evidence(const Query& q) {
  Evidence e;
  for (const auto& [attr, value] : q.constraints) e.bindings.emplace_back(attr, value);
  return e;
}

}  // namespace

std::vector<Query> expand(const Query& q, const BayesNet& bn, int beam, int num_esqs,
                          int target_size) {
  if (q.constraints.empty()) throw std::invalid_argument("expand: empty query");
  if (beam < 1 || num_esqs < 1) throw std::invalid_argument("expand: beam and count must be >= 1");
  const int m = static_cast<int>(bn.schema().size());
  if (target_size <= 0 || target_size > m) target_size = m;

  struct Node {
    Query query;
    double priority;
    std::uint64_t seq;  // tie-break: earlier insertions first
  };
  auto worse = [](const Node& a, const Node& b) {
    if (a.priority != b.priority) return a.priority < b.priority;
    return a.seq > b.seq;
  };
  std::priority_queue<Node, std::vector<Node>, decltype(worse)> frontier(worse);
  std::set<std::string> visited;
  std::uint64_t seq = 0;

  frontier.push({q, 1.0, seq++});
  visited.insert(q.key());

  std::vector<Query> esqs;
  while (!frontier.empty() && static_cast<int>(esqs.size()) < num_esqs) {
    const Node node = frontier.top();
    frontier.pop();
    if (static_cast<int>(node.query.size()) >= target_size) {
      esqs.push_back(node.query);
      continue;
    }

    // Candidate bindings: values of unbound blanket attributes, by posterior.
    std::set<int> blanket;
    for (const auto& [attr, value] : node.query.constraints)
      for (int b : bn.markov_blanket(attr)) blanket.insert(b);
    const Evidence evidence = to_evidence(node.query);
    struct Binding {
      double posterior;
      int attr;
      int value_idx;
    };
    std::vector<Binding> bindings;
    for (int attr : blanket) {
      if (node.query.constrains(attr)) continue;
      const std::vector<double> post = bn.posterior(attr, evidence);
      for (std::size_t v = 0; v < post.size(); ++v)
        bindings.push_back({post[v], attr, static_cast<int>(v)});
    }
    std::sort(bindings.begin(), bindings.end(), [](const Binding& a, const Binding& b) {
      if (a.posterior != b.posterior) return a.posterior > b.posterior;
      if (a.attr != b.attr) return a.attr < b.attr;
      return a.value_idx < b.value_idx;
    });
    if (bindings.size() > static_cast<std::size_t>(beam)) bindings.resize(beam);

    bool grew = false;
    for (const auto& b : bindings) {
      Query child = node.query;
      child.constraints.emplace_back(b.attr, bn.schema().domains[b.attr][b.value_idx]);
      std::sort(child.constraints.begin(), child.constraints.end());
      if (!visited.insert(child.key()).second) continue;
      const double pr = bn.evidence_prob(to_evidence(child));
      const double priority =
          std::pow(pr, static_cast<double>(m) / static_cast<double>(child.size()));
      frontier.push({std::move(child), priority, seq++});
      grew = true;
    }
    // Dead end short of the target: the fragment itself is the best we have.
    if (!grew) esqs.push_back(node.query);
  }
  return esqs;
}

std::vector<RankedQuery> relax_and_rank(const Query& esq, const ErrorStats& stats,
                                        std::size_t num_attrs) {
  const std::size_t c = esq.size();
  if (c == 0) throw std::invalid_argument("relax_and_rank: empty query");
  if (c >= 64) throw std::invalid_argument("relax_and_rank: too many constraints");

  std::vector<RankedQuery> out;
  for (std::uint64_t mask = 1; mask < (1ull << c); ++mask) {
    RankedQuery rq;
    for (std::size_t i = 0; i < c; ++i)
      if (mask & (1ull << i)) rq.query.constraints.push_back(esq.constraints[i]);
    double rel = 1.0;
    for (std::size_t attr = 0; attr < num_attrs; ++attr) {
      if (rq.query.constrains(static_cast<int>(attr))) continue;  // kept: factor 1
      if (const std::string* v = esq.value_of(static_cast<int>(attr)))
        rel *= stats.retention(static_cast<int>(attr), *v);  // dropped from esq
      else
        rel *= stats.per_attribute[attr];  // never constrained
    }
    rq.expected_relevance = rel;
    out.push_back(std::move(rq));
  }
  std::sort(out.begin(), out.end(), [](const RankedQuery& a, const RankedQuery& b) {
    if (a.expected_relevance != b.expected_relevance)
      return a.expected_relevance > b.expected_relevance;
    if (a.query.size() != b.query.size()) return a.query.size() > b.query.size();
    return a.query.key() < b.query.key();
  });
  return out;
}

namespace {

// Expected relevance of running a query as-is (relax_and_rank's formula with
// nothing dropped): 1 for constrained attributes, mean retention elsewhere.
double self_relevance(const Query& q, const ErrorStats& stats, std::size_t num_attrs) {
  double rel = 1.0;
  for (std::size_t attr = 0; attr < num_attrs; ++attr)
    if (!q.constrains(static_cast<int>(attr))) rel *= stats.per_attribute[attr];
  return rel;
}

}  // namespace

std::vector<ScoredResult> answer(const Query& q, const Dataset& dirty, const TupleScorer& scorer,
                                 const ErrorStats& stats, const AnswerOptions& opt) {
  if (q.constraints.empty()) throw std::invalid_argument("answer: empty query");
  if (opt.k < 1) throw std::invalid_argument("answer: k must be at least 1");
  if (opt.confidence < 0.0 || opt.confidence > 1.0)
    throw std::invalid_argument("answer: confidence must be in [0, 1]");
  const std::size_t m = dirty.schema.size();

  std::map<std::int64_t, ScoredResult> scored;
  std::set<std::string> executed;
  std::vector<double> ratios;  // best achieved score / expected relevance, per executed query

  auto kth_score = [&]() {
    if (scored.size() < static_cast<std::size_t>(opt.k)) return 0.0;
    std::vector<double> scores;
    scores.reserve(scored.size());
    for (const auto& [id, r] : scored) scores.push_back(r.score);
    std::nth_element(scores.begin(), scores.begin() + (opt.k - 1), scores.end(),
                     std::greater<>());
    return scores[opt.k - 1];
  };

  auto execute = [&](const Query& query, double expected_rel) {
    if (!executed.insert(query.key()).second) return;
    double best = 0.0;
    for (const auto& row : baseline_select(query, dirty)) {
      auto it = scored.find(row.id);
      if (it == scored.end()) {
        const double s = score_tuple(row, q, scorer);
        it = scored.emplace(row.id, ScoredResult{row, s}).first;
      }
      best = std::max(best, it->second.score);
    }
    ratios.push_back(best / std::max(expected_rel, 1e-12));
  };

  execute(q, self_relevance(q, stats, m));

  // Expansion needs every constrained value inside the model's domains.
  bool expandable = true;
  for (const auto& [attr, value] : q.constraints)
    if (scorer.bn().schema().value_index(attr, value) < 0) {
      expandable = false;
      break;
    }
  std::vector<Query> esqs;
  if (expandable)
    esqs = expand(q, scorer.bn(), opt.beam, opt.esq_count, opt.target_size);
  else
    esqs = {q};
  for (const auto& esq : esqs) execute(esq, self_relevance(esq, stats, m));

  // Pool the relaxations of every expanded query, keeping the best estimate
  // for duplicates.
  std::map<std::string, RankedQuery> pool;
  for (const auto& esq : esqs) {
    for (auto& rq : relax_and_rank(esq, stats, m)) {
      auto [it, inserted] = pool.emplace(rq.query.key(), rq);
      if (!inserted && rq.expected_relevance > it->second.expected_relevance)
        it->second.expected_relevance = rq.expected_relevance;
    }
  }
  std::vector<RankedQuery> rqs;
  for (auto& [key, rq] : pool)
    if (!executed.count(key)) rqs.push_back(std::move(rq));
  std::sort(rqs.begin(), rqs.end(), [](const RankedQuery& a, const RankedQuery& b) {
    if (a.expected_relevance != b.expected_relevance)
      return a.expected_relevance > b.expected_relevance;
    if (a.query.size() != b.query.size()) return a.query.size() > b.query.size();
    return a.query.key() < b.query.key();
  });

  for (const auto& rq : rqs) {
    // Early stop only once a full top-k exists; lambda = current k-th score.
    if (scored.size() >= static_cast<std::size_t>(opt.k) && opt.confidence > 0.0) {
      const double lambda = kth_score();
      bool proceed;
      if (ratios.size() < 3) {
        proceed = rq.expected_relevance > lambda;  // too few observations to calibrate
      } else {
        std::size_t beats = 0;
        for (double r : ratios)
          if (rq.expected_relevance * r > lambda) ++beats;
        const double p_improve = static_cast<double>(beats) / static_cast<double>(ratios.size());
        proceed = p_improve >= opt.confidence;
      }
      if (!proceed) break;
    }
    execute(rq.query, rq.expected_relevance);
  }

  // With the stop rule disabled the caller wants the true exhaustive answer,
  // which the relaxation pool alone cannot promise: a row corrupted on every
  // attribute the pooled queries touch is unreachable through them. Finish
  // with the weakest possible relaxation, the constraint-free scan.
  if (opt.confidence == 0.0) {
    for (const auto& row : dirty.rows)
      if (!scored.count(row.id))
        scored.emplace(row.id, ScoredResult{row, score_tuple(row, q, scorer)});
  }

  std::vector<ScoredResult> out;
  for (const auto& [id, r] : scored)
    if (r.score > 0.0) out.push_back(r);
  std::sort(out.begin(), out.end(), [](const ScoredResult& a, const ScoredResult& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.tuple.id < b.tuple.id;
  });
  if (out.size() > static_cast<std::size_t>(opt.k)) out.resize(opt.k);
  return out;
}

}  // namespace probwipe
