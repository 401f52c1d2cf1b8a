#include "probwipe/cleaner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>

#include "json.hpp"

namespace probwipe {

namespace {

std::string join_key(const Tuple& t) {
  std::string key;
  for (const auto& v : t.values) {
    key += v;
    key.push_back('\x1f');
  }
  return key;
}

}  // namespace

TupleScorer::TupleScorer(const BayesNet& bn, const ErrorContext& ctx, const ErrorParams& params,
                         const CandidateIndex& idx)
    : bn_(&bn), ctx_(&ctx), params_(params), idx_(&idx), cache_(std::make_shared<Cache>()) {
  cache_->features.resize(bn.schema().size());
}

TupleScorer TupleScorer::with_gamma(double gamma) const {
  TupleScorer copy = *this;
  copy.params_.gamma = gamma;
  return copy;  // shares the gamma-independent feature cache
}

double TupleScorer::weight(const Tuple& observed, const Tuple& candidate) const {
  const std::size_t m = bn_->schema().size();
  double ed = 0.0, ds = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    auto& memo = cache_->features[i];
    std::string key = observed.values[i];
    key.push_back('\x1f');
    key += candidate.values[i];
    auto it = memo.find(key);
    if (it == memo.end()) {
      const double fe = f_ed(observed.values[i], candidate.values[i]);
      const double fd = ctx_->f_ds(static_cast<int>(i), observed.values[i], candidate.values[i]);
      it = memo.emplace(std::move(key), std::make_pair(fe, fd)).first;
    }
    ed += it->second.first;
    ds += it->second.second;
  }
  return std::exp(params_.gamma * (params_.delta * ed + (1.0 - params_.delta) * ds));
}

double TupleScorer::prior(const Tuple& candidate) const {
  std::string key = join_key(candidate);
  auto it = cache_->priors.find(key);
  if (it == cache_->priors.end())
    it = cache_->priors.emplace(std::move(key), bn_->joint_prob(candidate)).first;
  return it->second;
}

double TupleScorer::pair_score(const Tuple& observed, const Tuple& candidate) const {
  return prior(candidate) * weight(observed, candidate);
}

std::vector<Tuple> TupleScorer::scorable_candidates(const Tuple& t) const {
  std::vector<Tuple> cands;
  bool has_self = false;
  for (int d : idx_->candidate_ids(t)) {
    const Tuple& cand = idx_->distinct_tuples()[d];
    if (!cand.fully_specified()) continue;  // a repair must be a complete tuple
    if (same_values(cand, t)) has_self = true;
    cands.push_back(cand);
  }
  if (!has_self && t.fully_specified()) {
    const auto& schema = bn_->schema();
    bool in_domain = true;
    for (std::size_t i = 0; i < schema.size(); ++i)
      if (schema.value_index(i, t.values[i]) < 0) {
        in_domain = false;
        break;
      }
    if (in_domain) cands.push_back(t);  // "no change" must stay choosable
  }
  return cands;
}

bool repair_order(double score_a, const Tuple& a, double score_b, const Tuple& b, const Tuple& t) {
  if (score_a != score_b) return score_a > score_b;
  const bool self_a = same_values(a, t), self_b = same_values(b, t);
  if (self_a != self_b) return self_a;
  return a.values < b.values;
}

CleanedTuple TupleScorer::clean_tuple(const Tuple& t) const {
  CleanedTuple out;
  out.original_id = t.id;
  std::vector<Tuple> cands = scorable_candidates(t);
  if (cands.empty()) {
    out.alternatives.emplace_back(t, 1.0);
    out.uncleanable = true;
    return out;
  }

  std::vector<double> raw(cands.size());
  double z = 0.0;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    raw[i] = pair_score(t, cands[i]);
    z += raw[i];
  }

  std::vector<std::size_t> order(cands.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return repair_order(raw[a], cands[a], raw[b], cands[b], t);
  });

  out.alternatives.reserve(cands.size());
  for (std::size_t i : order) out.alternatives.emplace_back(std::move(cands[i]), raw[i] / z);
  return out;
}

Dataset clean_dataset(const Dataset& d, const TupleScorer& scorer) {
  Dataset out;
  out.schema.attributes = d.schema.attributes;
  out.rows.reserve(d.rows.size());
  for (const auto& row : d.rows) {
    Tuple chosen = scorer.clean_tuple(row).chosen();
    chosen.id = row.id;
    out.rows.push_back(std::move(chosen));
  }
  rebuild_domains(out);
  return out;
}

Pdb clean_dataset_pdb(const Dataset& d, const TupleScorer& scorer) {
  Pdb out;
  out.schema = d.schema;
  out.rows.reserve(d.rows.size());
  for (const auto& row : d.rows) out.rows.push_back(scorer.clean_tuple(row));
  return out;
}

namespace {

Dataset alternatives_to_dataset(const Pdb& pdb,
                                const std::function<std::size_t(const CleanedTuple&)>& keep) {
  Dataset out;
  out.schema.attributes = pdb.schema.attributes;
  std::int64_t next_id = 0;
  for (const auto& row : pdb.rows) {
    const std::size_t n = keep(row);
    for (std::size_t i = 0; i < n; ++i) {
      Tuple t = row.alternatives[i].first;
      t.id = next_id++;
      out.rows.push_back(std::move(t));
    }
  }
  rebuild_domains(out);
  return out;
}

}  // namespace

Dataset determinize_threshold(const Pdb& pdb, double p) {
  if (p < 0.0 || p >= 1.0)
    throw std::invalid_argument("determinize_threshold: p must be in [0, 1)");
  return alternatives_to_dataset(pdb, [p](const CleanedTuple& row) {
    std::size_t n = 0;
    while (n < row.alternatives.size() && row.alternatives[n].second > p) ++n;
    return n;
  });
}

Dataset determinize_topk(const Pdb& pdb, int k) {
  if (k < 1) throw std::invalid_argument("determinize_topk: k must be at least 1");
  return alternatives_to_dataset(pdb, [k](const CleanedTuple& row) {
    return std::min(row.alternatives.size(), static_cast<std::size_t>(k));
  });
}

void save_pdb_jsonl(const Pdb& pdb, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  char buf[32];
  for (const auto& row : pdb.rows) {
    out << "{\"original_id\":" << row.original_id << ",\"alternatives\":[";
    for (std::size_t i = 0; i < row.alternatives.size(); ++i) {
      if (i) out << ',';
      out << "{\"values\":[";
      for (std::size_t v = 0; v < row.alternatives[i].first.values.size(); ++v) {
        if (v) out << ',';
        out << nlohmann::json(row.alternatives[i].first.values[v]).dump();
      }
      std::snprintf(buf, sizeof buf, "%.6f", row.alternatives[i].second);
      out << "],\"p\":" << buf << '}';
    }
    out << "]}\n";
  }
}

Pdb load_pdb_jsonl(const std::string& path, const Schema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  Pdb pdb;
  pdb.schema = schema;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError("pdb line " + std::to_string(lineno) + ": " + e.what());
    }
    CleanedTuple row;
    if (!obj.contains("original_id") || !obj.contains("alternatives"))
      throw DataError("pdb line " + std::to_string(lineno) + ": missing keys");
    try {
      row.original_id = obj["original_id"].get<std::int64_t>();
      for (const auto& alt : obj["alternatives"]) {
        Tuple t;
        t.id = row.original_id;
        for (const auto& v : alt.at("values")) t.values.push_back(v.get<std::string>());
        if (t.values.size() != schema.size())
          throw DataError("pdb line " + std::to_string(lineno) + ": arity mismatch");
        row.alternatives.emplace_back(std::move(t), alt.at("p").get<double>());
      }
    } catch (const nlohmann::json::exception& e) {
      throw DataError("pdb line " + std::to_string(lineno) + ": " + e.what());
    }
    if (row.alternatives.empty())
      throw DataError("pdb line " + std::to_string(lineno) + ": no alternatives");
    pdb.rows.push_back(std::move(row));
  }
  return pdb;
}

double calibrate_gamma(const Dataset& d, const TupleScorer& scorer,
                       double target_modified_fraction, std::size_t max_rows) {
  if (!(target_modified_fraction > 0.0) || target_modified_fraction >= 1.0)
    throw std::invalid_argument("calibrate_gamma: target fraction must be in (0, 1)");
  const std::size_t n = std::min(d.rows.size(), max_rows);
  if (n == 0) throw std::invalid_argument("calibrate_gamma: empty dataset");

  auto modified_fraction = [&](double gamma) {
    const TupleScorer s = scorer.with_gamma(gamma);
    std::size_t changed = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (!same_values(s.clean_tuple(d.rows[i]).chosen(), d.rows[i])) ++changed;
    return static_cast<double>(changed) / static_cast<double>(n);
  };

  double lo = 0.2, hi = 50.0;
  if (modified_fraction(hi) > target_modified_fraction) return hi;
  if (modified_fraction(lo) < target_modified_fraction) return lo;
  for (int iter = 0; iter < 24; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (modified_fraction(mid) > target_modified_fraction)
      lo = mid;  // still changing too much: raise gamma
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace probwipe
