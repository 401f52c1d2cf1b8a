#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "probwipe/bayes_net.hpp"
#include "probwipe/rng.hpp"

namespace probwipe {

// Scores the same coarsened families that fit_cpts would estimate, so the
// search cannot pick a structure whose tables the fit would not support: a
// tail of corrupted strings would otherwise dwarf the BIC penalty and make
// near-unique parent combinations look like free deterministic fits.
double family_bic(const Dataset& d, int node, const std::vector<int>& parents) {
  const auto& schema = d.schema;
  const ValuePooling child = pool_attribute(d, node);
  std::vector<ValuePooling> par;
  par.reserve(parents.size());
  for (int p : parents) par.push_back(pool_attribute(d, p));
  const std::int64_t dom = std::max<std::int64_t>(child.size(), 1);

  // count(parent combo, value) and count(parent combo) over rows where the
  // whole family is observed.
  std::unordered_map<std::uint64_t, std::int64_t> joint;
  std::unordered_map<std::uint64_t, std::int64_t> totals;
  std::int64_t n = 0;
  for (const auto& row : d.rows) {
    const int vc = schema.value_index(node, row.values[node]);
    if (vc < 0) continue;
    std::uint64_t combo = 0;
    bool usable = true;
    for (std::size_t k = 0; k < parents.size(); ++k) {
      const int pc = schema.value_index(parents[k], row.values[parents[k]]);
      if (pc < 0) {
        usable = false;
        break;
      }
      combo = combo * static_cast<std::uint64_t>(par[k].size()) +
              static_cast<std::uint64_t>(par[k].code[pc]);
    }
    if (!usable) continue;
    joint[combo * static_cast<std::uint64_t>(dom) + static_cast<std::uint64_t>(child.code[vc])] +=
        1;
    totals[combo] += 1;
    ++n;
  }
  if (n == 0) return 0.0;

  double loglik = 0.0;
  for (const auto& [key, cnt] : joint) {
    const std::int64_t tot = totals.at(key / static_cast<std::uint64_t>(dom));
    loglik += static_cast<double>(cnt) *
              std::log(static_cast<double>(cnt) / static_cast<double>(tot));
  }
  double combos = 1.0;
  for (const auto& pc : par) combos *= static_cast<double>(std::max(pc.size(), 1));
  const double free_params = static_cast<double>(dom - 1) * combos;
  return loglik - 0.5 * std::log(static_cast<double>(n)) * free_params;
}

namespace {

struct Search {
  const Dataset& d;
  int max_parents;
  std::map<std::pair<int, std::vector<int>>, double> cache;

  double family(int node, std::vector<int> parents) {
    std::sort(parents.begin(), parents.end());
    auto key = std::make_pair(node, parents);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    const double s = family_bic(d, node, key.second);
    cache.emplace(std::move(key), s);
    return s;
  }

  double total(const std::vector<std::vector<int>>& parents) {
    double s = 0.0;
    for (std::size_t v = 0; v < parents.size(); ++v) s += family(static_cast<int>(v), parents[v]);
    return s;
  }
};

bool has_edge(const std::vector<std::vector<int>>& parents, int u, int v) {
  return std::find(parents[v].begin(), parents[v].end(), u) != parents[v].end();
}

// Would adding u -> v close a cycle? True iff v already reaches u.
bool reaches(const std::vector<std::vector<int>>& parents, int from, int to) {
  if (from == to) return true;
  std::vector<int> stack{to};  // walk parent edges backward from `to`
  std::vector<bool> seen(parents.size(), false);
  seen[to] = true;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int p : parents[v]) {
      if (p == from) return true;
      if (!seen[p]) {
        seen[p] = true;
        stack.push_back(p);
      }
    }
  }
  return false;
}

std::vector<std::vector<int>> hill_climb(Search& search, std::vector<std::vector<int>> parents,
                                         double* out_score) {
  const int m = static_cast<int>(parents.size());
  std::vector<double> fam(m);
  for (int v = 0; v < m; ++v) fam[v] = search.family(v, parents[v]);

  const double min_gain = 1e-9;
  for (;;) {
    double best_gain = min_gain;
    int best_u = -1, best_v = -1, best_op = -1;  // 0 add, 1 remove, 2 reverse
    double best_fam_v = 0.0, best_fam_u = 0.0;

    for (int u = 0; u < m; ++u) {
      for (int v = 0; v < m; ++v) {
        if (u == v) continue;
        if (!has_edge(parents, u, v)) {
          // add u -> v
          if (static_cast<int>(parents[v].size()) >= search.max_parents) continue;
          if (reaches(parents, v, u)) continue;  // u is reachable from v: would cycle
          auto ps = parents[v];
          ps.push_back(u);
          const double f = search.family(v, ps);
          const double gain = f - fam[v];
          if (gain > best_gain) {
            best_gain = gain;
            best_u = u;
            best_v = v;
            best_op = 0;
            best_fam_v = f;
          }
        } else {
          // remove u -> v
          auto ps = parents[v];
          ps.erase(std::find(ps.begin(), ps.end(), u));
          const double f = search.family(v, ps);
          {
            const double gain = f - fam[v];
            if (gain > best_gain) {
              best_gain = gain;
              best_u = u;
              best_v = v;
              best_op = 1;
              best_fam_v = f;
            }
          }
          // reverse to v -> u
          if (static_cast<int>(parents[u].size()) < search.max_parents) {
            auto removed = parents;
            removed[v] = ps;
            if (!reaches(removed, u, v)) {
              auto pu = parents[u];
              pu.push_back(v);
              const double fu = search.family(u, pu);
              const double gain = (f - fam[v]) + (fu - fam[u]);
              if (gain > best_gain) {
                best_gain = gain;
                best_u = u;
                best_v = v;
                best_op = 2;
                best_fam_v = f;
                best_fam_u = fu;
              }
            }
          }
        }
      }
    }

    if (best_op < 0) break;
    if (best_op == 0) {
      parents[best_v].push_back(best_u);
      std::sort(parents[best_v].begin(), parents[best_v].end());
      fam[best_v] = best_fam_v;
    } else if (best_op == 1) {
      parents[best_v].erase(std::find(parents[best_v].begin(), parents[best_v].end(), best_u));
      fam[best_v] = best_fam_v;
    } else {
      parents[best_v].erase(std::find(parents[best_v].begin(), parents[best_v].end(), best_u));
      parents[best_u].push_back(best_v);
      std::sort(parents[best_u].begin(), parents[best_u].end());
      fam[best_v] = best_fam_v;
      fam[best_u] = best_fam_u;
    }
  }

  if (out_score) {
    *out_score = 0.0;
    for (int v = 0; v < m; ++v) *out_score += fam[v];
  }
  return parents;
}

// Random DAG: random permutation as a topological order, then each node keeps
// up to max_parents random predecessors.
std::vector<std::vector<int>> random_dag(int m, int max_parents, Rng& rng) {
  std::vector<int> order(m);
  for (int i = 0; i < m; ++i) order[i] = i;
  for (int i = m - 1; i > 0; --i)
    std::swap(order[i], order[rng.below(static_cast<std::uint64_t>(i) + 1)]);

  std::vector<std::vector<int>> parents(m);
  for (int pos = 1; pos < m; ++pos) {
    const int v = order[pos];
    const auto want = static_cast<int>(rng.below(static_cast<std::uint64_t>(max_parents) + 1));
    std::vector<int> pool(order.begin(), order.begin() + pos);
    for (int t = 0; t < want && !pool.empty(); ++t) {
      const auto pick = static_cast<std::size_t>(rng.below(pool.size()));
      parents[v].push_back(pool[pick]);
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
    }
    std::sort(parents[v].begin(), parents[v].end());
  }
  return parents;
}

}  // namespace

std::vector<std::vector<int>> learn_structure(const Dataset& d, int max_parents, int restarts,
                                              std::uint64_t seed) {
  if (max_parents < 0) throw std::invalid_argument("learn_structure: max_parents negative");
  if (restarts < 0) throw std::invalid_argument("learn_structure: restarts negative");
  const int m = static_cast<int>(d.schema.size());
  Search search{d, max_parents, {}};
  Rng rng(seed);

  std::vector<std::vector<int>> best;
  double best_score = 0.0;
  for (int r = 0; r <= restarts; ++r) {
    std::vector<std::vector<int>> start(m);
    if (r > 0 && max_parents > 0) start = random_dag(m, max_parents, rng);
    double score = 0.0;
    auto result = hill_climb(search, std::move(start), &score);
    if (best.empty() || score > best_score) {
      best = std::move(result);
      best_score = score;
    }
  }
  if (best.empty()) best.assign(m, {});
  return best;
}

}  // namespace probwipe
