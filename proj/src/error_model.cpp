#include "probwipe/error_model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace probwipe {

int levenshtein(std::string_view a, std::string_view b) {
  const std::size_t la = a.size(), lb = b.size();
  if (la == 0) return static_cast<int>(lb);
  if (lb == 0) return static_cast<int>(la);

  std::vector<int> row(lb + 1);
  for (std::size_t j = 0; j <= lb; ++j) row[j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= la; ++i) {
    int diag = row[0];
    row[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= lb; ++j) {
      const int subst = diag + (a[i - 1] == b[j - 1] ? 0 : 1);
      diag = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, subst});
    }
  }
  return row[lb];
}

double f_ed(std::string_view observed, std::string_view clean) {
  return std::exp(-static_cast<double>(levenshtein(observed, clean)));
}

ErrorContext::ErrorContext(const Dataset& sample, double mu) : mu_(mu) {
  if (!(mu > 0.0)) throw std::invalid_argument("ErrorContext: mu must be positive");
  schema_ = sample.schema;
  const std::size_t m = schema_.size();
  num_rows_ = static_cast<std::int64_t>(sample.rows.size());
  attrs_.resize(m);

  // Pass 1: per-attribute value codes and counts, in first-seen order.
  std::vector<std::vector<int>> row_codes(sample.rows.size(), std::vector<int>(m, -1));
  for (std::size_t r = 0; r < sample.rows.size(); ++r) {
    for (std::size_t i = 0; i < m; ++i) {
      const auto& v = sample.rows[r].values[i];
      if (is_missing(v)) continue;
      auto& st = attrs_[i];
      auto [it, inserted] = st.code_of.try_emplace(v, static_cast<int>(st.count.size()));
      if (inserted) st.count.push_back(0);
      st.count[it->second] += 1;
      row_codes[r][i] = it->second;
    }
  }

  ctx_offset_.resize(m + 1);
  ctx_offset_[0] = 0;
  for (std::size_t i = 0; i < m; ++i)
    ctx_offset_[i + 1] = ctx_offset_[i] + static_cast<int>(attrs_[i].count.size());
  ctx_count_.assign(ctx_offset_[m], 0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t c = 0; c < attrs_[i].count.size(); ++c)
      ctx_count_[ctx_offset_[i] + c] = attrs_[i].count[c];

  // Pass 2: co-occurrence of each value with values of the other attributes.
  std::vector<std::vector<std::map<int, std::int64_t>>> acc(m);
  for (std::size_t i = 0; i < m; ++i) acc[i].resize(attrs_[i].count.size());
  for (std::size_t r = 0; r < sample.rows.size(); ++r) {
    for (std::size_t i = 0; i < m; ++i) {
      const int ci = row_codes[r][i];
      if (ci < 0) continue;
      for (std::size_t b = 0; b < m; ++b) {
        if (b == i) continue;
        const int cb = row_codes[r][b];
        if (cb < 0) continue;
        acc[i][ci][ctx_offset_[b] + cb] += 1;
      }
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    attrs_[i].cooc.resize(attrs_[i].count.size());
    for (std::size_t c = 0; c < acc[i].size(); ++c)
      attrs_[i].cooc[c].assign(acc[i][c].begin(), acc[i][c].end());
  }
}

std::int64_t ErrorContext::value_count(int attr, const std::string& v) const {
  const auto& st = attrs_[attr];
  auto it = st.code_of.find(v);
  return it == st.code_of.end() ? 0 : st.count[it->second];
}

double ErrorContext::f_ds(int attr, const std::string& observed, const std::string& clean) const {
  if (is_missing(observed) || is_missing(clean)) return 0.0;
  const auto& st = attrs_[attr];
  const auto io = st.code_of.find(observed);
  const auto ic = st.code_of.find(clean);
  if (io == st.code_of.end() || ic == st.code_of.end()) return 0.0;  // #(v) = 0

  const auto n = static_cast<double>(num_rows_);
  const auto n_obs = static_cast<double>(st.count[io->second]);
  const auto n_cln = static_cast<double>(st.count[ic->second]);
  const double p_obs = n_obs / n;

  const auto& co = st.cooc[io->second];
  const auto& cc = st.cooc[ic->second];
  double sum = 0.0;
  std::size_t a = 0, b = 0;
  while (a < co.size() && b < cc.size()) {
    if (co[a].first < cc[b].first) {
      ++a;
    } else if (cc[b].first < co[a].first) {
      ++b;
    } else {
      const int gid = co[a].first;
      const double p_c_given_clean = (static_cast<double>(cc[b].second) + mu_) / n_cln;
      const double p_c_given_obs = (static_cast<double>(co[a].second) + mu_) / n_obs;
      const double p_c = static_cast<double>(ctx_count_[gid]) / n;
      sum += p_c_given_clean * p_c_given_obs * p_obs / p_c;
      ++a;
      ++b;
    }
  }
  return sum;
}

double ErrorContext::feature_sum(const Tuple& observed, const Tuple& clean,
                                 const ErrorParams& p) const {
  const std::size_t m = schema_.size();
  double ed = 0.0, ds = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    ed += f_ed(observed.values[i], clean.values[i]);
    ds += f_ds(static_cast<int>(i), observed.values[i], clean.values[i]);
  }
  return p.delta * ed + (1.0 - p.delta) * ds;
}

double likelihood(const Tuple& observed, const Tuple& clean, const ErrorParams& p,
                  const ErrorContext& ctx, const std::vector<Tuple>& candidates) {
  if (candidates.empty()) throw std::invalid_argument("likelihood: empty candidate set");
  double z = 0.0;
  double w_clean = -1.0;
  for (const auto& cand : candidates) {
    const double w = std::exp(p.gamma * ctx.feature_sum(observed, cand, p));
    z += w;
    if (w_clean < 0.0 && same_values(cand, clean)) w_clean = w;
  }
  if (w_clean < 0.0) throw std::invalid_argument("likelihood: clean tuple not among candidates");
  return w_clean / z;
}

ErrorStats learn_error_stats(const Dataset& sample,
                             const std::function<Tuple(const Tuple&)>& cleaner) {
  const std::size_t m = sample.schema.size();
  std::vector<std::unordered_map<std::string, std::pair<std::int64_t, std::int64_t>>> tally(m);
  for (const auto& row : sample.rows) {
    const Tuple cleaned = cleaner(row);
    for (std::size_t i = 0; i < m; ++i) {
      const auto& v = cleaned.values[i];
      if (is_missing(v)) continue;
      auto& [kept, produced] = tally[i][v];
      produced += 1;
      if (row.values[i] == v) kept += 1;
    }
  }

  ErrorStats stats;
  stats.per_value.resize(m);
  stats.per_attribute.assign(m, 1.0);  // no evidence of error without data
  for (std::size_t i = 0; i < m; ++i) {
    std::int64_t kept_total = 0, produced_total = 0;
    for (const auto& [v, counts] : tally[i]) {
      stats.per_value[i][v] =
          static_cast<double>(counts.first) / static_cast<double>(counts.second);
      kept_total += counts.first;
      produced_total += counts.second;
    }
    if (produced_total > 0)
      stats.per_attribute[i] =
          static_cast<double>(kept_total) / static_cast<double>(produced_total);
  }
  return stats;
}

}  // namespace probwipe
