#include "probwipe/eval.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "probwipe/error_model.hpp"
#include "probwipe/rng.hpp"

namespace probwipe {

namespace {

const char kTypoAlphabet[] = "abcdefghijklmnopqrstuvwxyz";

std::string random_edits(const std::string& v, int edits, Rng& rng) {
  std::string s = v;
  for (int e = 0; e < edits; ++e) {
    int op = static_cast<int>(rng.below(3));
    if (s.empty()) op = 0;  // only insertion applies
    if (op == 0) {
      const auto pos = static_cast<std::size_t>(rng.below(s.size() + 1));
      s.insert(s.begin() + static_cast<std::ptrdiff_t>(pos),
               kTypoAlphabet[rng.below(sizeof kTypoAlphabet - 1)]);
    } else if (op == 1) {
      s.erase(s.begin() + static_cast<std::ptrdiff_t>(rng.below(s.size())));
    } else {
      s[rng.below(s.size())] = kTypoAlphabet[rng.below(sizeof kTypoAlphabet - 1)];
    }
  }
  return s;
}

std::string make_typo(const std::string& v, const std::vector<std::string>& domain, Rng& rng) {
  const int target = 1 + static_cast<int>(rng.below(4));
  std::string fallback;
  for (int attempt = 0; attempt < 30; ++attempt) {
    const std::string s = random_edits(v, target, rng);
    if (s == v || s.empty()) continue;
    const int dist = levenshtein(s, v);
    const bool in_domain = std::binary_search(domain.begin(), domain.end(), s);
    if (dist == target && !in_domain) return s;
    if (fallback.empty() && dist >= 1 && !in_domain) fallback = s;
  }
  if (!fallback.empty()) return fallback;
  // Last resort: one guaranteed-fresh appended character cycle.
  std::string s = v;
  s.push_back('#');
  return s;
}

}  // namespace

Dataset inject_noise(const Dataset& clean, const NoiseSpec& spec) {
  if (spec.rate < 0.0 || spec.rate > 1.0)
    throw std::invalid_argument("inject_noise: rate must be in [0, 1]");
  double mix_total = 0.0;
  for (double m : spec.mix) {
    if (m < 0.0) throw std::invalid_argument("inject_noise: negative mix weight");
    mix_total += m;
  }
  if (!(mix_total > 0.0)) throw std::invalid_argument("inject_noise: zero mix");

  Dataset dirty = clean;
  Rng rng(spec.seed);
  const std::size_t m = clean.schema.size();
  for (auto& row : dirty.rows) {
    for (std::size_t i = 0; i < m; ++i) {
      std::string& cell = row.values[i];
      if (is_missing(cell)) continue;
      if (rng.unit() >= spec.rate) continue;
      const double pick = rng.unit() * mix_total;
      const auto& domain = clean.schema.domains[i];
      if (pick < spec.mix[0]) {
        cell = make_typo(cell, domain, rng);
      } else if (pick < spec.mix[0] + spec.mix[1]) {
        if (domain.size() < 2) {
          cell = make_typo(cell, domain, rng);  // nothing to substitute with
        } else {
          std::size_t idx = static_cast<std::size_t>(rng.below(domain.size() - 1));
          const auto self = static_cast<std::size_t>(
              std::lower_bound(domain.begin(), domain.end(), cell) - domain.begin());
          if (idx >= self) ++idx;  // skip the current value
          cell = domain[idx];
        }
      } else {
        cell.clear();
      }
    }
  }
  rebuild_domains(dirty);
  return dirty;
}

OfflineEval evaluate_offline(const Dataset& cleaned, const Dataset& dirty, const Dataset& truth) {
  const std::size_t n = truth.rows.size();
  const std::size_t m = truth.schema.size();
  if (cleaned.rows.size() != n || dirty.rows.size() != n ||
      cleaned.schema.size() != m || dirty.schema.size() != m)
    throw std::invalid_argument("evaluate_offline: dataset shapes differ");

  OfflineEval ev;
  for (std::size_t r = 0; r < n; ++r) {
    if (cleaned.rows[r].id != truth.rows[r].id || dirty.rows[r].id != truth.rows[r].id)
      throw std::invalid_argument("evaluate_offline: row ids are not aligned");
    for (std::size_t i = 0; i < m; ++i) {
      const auto& t = truth.rows[r].values[i];
      const auto& d = dirty.rows[r].values[i];
      const auto& c = cleaned.rows[r].values[i];
      if (d != t) {
        ++ev.injected;
        if (c == t) ++ev.values_corrected;
      } else if (c != t) {
        ++ev.false_positives;
      }
    }
  }
  ev.net_gain = ev.values_corrected - ev.false_positives;
  ev.pct_corrupt_cleaned =
      ev.injected == 0 ? 0.0
                       : static_cast<double>(ev.values_corrected) / static_cast<double>(ev.injected);
  return ev;
}

namespace {

// Precision at the 11 standard recall levels for one ranked result list.
// relevant: truth-side match ids. At recall 0 report the top result's
// precision; at unreached levels report 0.
std::vector<double> precision_at_levels(const std::vector<std::int64_t>& ranked,
                                        const std::set<std::int64_t>& relevant,
                                        const std::vector<double>& levels) {
  std::vector<double> out(levels.size(), 0.0);
  if (ranked.empty() || relevant.empty()) return out;

  std::vector<double> precision, recall;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (relevant.count(ranked[i])) ++hits;
    precision.push_back(static_cast<double>(hits) / static_cast<double>(i + 1));
    recall.push_back(static_cast<double>(hits) / static_cast<double>(relevant.size()));
  }
  for (std::size_t l = 0; l < levels.size(); ++l) {
    if (levels[l] == 0.0) {
      out[l] = precision[0];
      continue;
    }
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      if (recall[i] + 1e-12 >= levels[l]) {
        out[l] = precision[i];
        break;
      }
    }
  }
  return out;
}

double precision_at_k(const std::vector<std::int64_t>& ranked,
                      const std::set<std::int64_t>& relevant, int k) {
  if (ranked.empty()) return 0.0;
  const std::size_t cut = std::min(ranked.size(), static_cast<std::size_t>(k));
  std::size_t hits = 0;
  for (std::size_t i = 0; i < cut; ++i)
    if (relevant.count(ranked[i])) ++hits;
  return static_cast<double>(hits) / static_cast<double>(cut);
}

}  // namespace

QueryEval evaluate_queries(const RankedIdsFn& system, const RankedIdsFn& baseline,
                           const Dataset& truth, int num_queries, int k, std::uint64_t seed) {
  if (num_queries < 1) throw std::invalid_argument("evaluate_queries: num_queries must be >= 1");
  if (k < 1) throw std::invalid_argument("evaluate_queries: k must be >= 1");
  if (truth.rows.empty()) throw std::invalid_argument("evaluate_queries: empty truth dataset");
  const std::size_t m = truth.schema.size();
  if (m < 1) throw std::invalid_argument("evaluate_queries: no attributes");

  QueryEval ev;
  ev.num_queries = num_queries;
  ev.k = k;
  for (int l = 0; l <= 10; ++l) ev.recall_levels.push_back(l / 10.0);
  ev.system_precision.assign(ev.recall_levels.size(), 0.0);
  ev.baseline_precision.assign(ev.recall_levels.size(), 0.0);

  Rng rng(seed);
  for (int qn = 0; qn < num_queries; ++qn) {
    // Anchor the query on a random truth row so it always has answers.
    Query q;
    for (int attempt = 0; attempt < 100 && q.constraints.empty(); ++attempt) {
      const auto& row = truth.rows[rng.below(truth.rows.size())];
      const std::size_t want = m >= 2 ? 1 + rng.below(2) : 1;
      std::vector<int> attrs(m);
      for (std::size_t i = 0; i < m; ++i) attrs[i] = static_cast<int>(i);
      for (std::size_t i = m - 1; i > 0; --i)
        std::swap(attrs[i], attrs[rng.below(i + 1)]);
      for (std::size_t i = 0; i < m && q.constraints.size() < want; ++i)
        if (!is_missing(row.values[attrs[i]]))
          q.constraints.emplace_back(attrs[i], row.values[attrs[i]]);
      std::sort(q.constraints.begin(), q.constraints.end());
    }
    if (q.constraints.empty())
      throw std::invalid_argument("evaluate_queries: could not draw a non-missing query");

    std::set<std::int64_t> relevant;
    for (const auto& row : truth.rows)
      if (satisfies(row, q)) relevant.insert(row.id);

    const std::vector<std::int64_t> sys_ids = system(q);
    const std::vector<std::int64_t> base_ids = baseline(q);
    const auto sys_levels = precision_at_levels(sys_ids, relevant, ev.recall_levels);
    const auto base_levels = precision_at_levels(base_ids, relevant, ev.recall_levels);
    for (std::size_t l = 0; l < ev.recall_levels.size(); ++l) {
      ev.system_precision[l] += sys_levels[l];
      ev.baseline_precision[l] += base_levels[l];
    }
    ev.system_p_at_k += precision_at_k(sys_ids, relevant, k);
    ev.baseline_p_at_k += precision_at_k(base_ids, relevant, k);
  }

  const auto nq = static_cast<double>(num_queries);
  for (std::size_t l = 0; l < ev.recall_levels.size(); ++l) {
    ev.system_precision[l] /= nq;
    ev.baseline_precision[l] /= nq;
  }
  ev.system_p_at_k /= nq;
  ev.baseline_p_at_k /= nq;
  return ev;
}

}  // namespace probwipe
