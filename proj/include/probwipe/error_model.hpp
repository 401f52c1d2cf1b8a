#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "probwipe/dataset.hpp"

namespace probwipe {

struct ErrorParams {
  double gamma = 5.8;
  double delta = 0.638;
  double mu = 0.1;
};

// Unit-cost Levenshtein distance on bytes.
int levenshtein(std::string_view a, std::string_view b);

// Spelling feature: exp(-edit distance). A missing observed value behaves as
// the empty string, so the distance is the length of the clean value.
double f_ed(std::string_view observed, std::string_view clean);

// Frequency and co-occurrence tables of the sample, shared by the
// distributional feature and anything else that needs value counts. Context
// values keep their attribute identity: "V6 as Engine" and "V6 as Model" are
// different context entries.
class ErrorContext {
 public:
  ErrorContext(const Dataset& sample, double mu);

  const Schema& schema() const { return schema_; }
  double mu() const { return mu_; }
  std::int64_t num_rows() const { return num_rows_; }
  std::int64_t value_count(int attr, const std::string& v) const;

  // Distributional similarity of observed vs clean within one attribute:
  //   sum over shared context values c of P(c|clean) * P(c|observed) * P(observed) / P(c)
  // with P(c|v) = (#(c,v) + mu) / #(v) and P(v) = #(v) / n. Zero when either
  // value is missing or unseen in the sample, or when the two values share no
  // context.
  double f_ds(int attr, const std::string& observed, const std::string& clean) const;

  // delta * sum_i f_ed + (1 - delta) * sum_i f_ds over all attributes; the
  // exponent body of the unnormalized weight exp(gamma * feature_sum).
  double feature_sum(const Tuple& observed, const Tuple& clean, const ErrorParams& p) const;

 private:
  struct AttrStats {
    std::unordered_map<std::string, int> code_of;
    std::vector<std::int64_t> count;  // by code
    // Per value code: sorted (global context id, co-occurrence count).
    std::vector<std::vector<std::pair<int, std::int64_t>>> cooc;
  };

  Schema schema_;
  double mu_;
  std::int64_t num_rows_ = 0;
  std::vector<AttrStats> attrs_;
  std::vector<int> ctx_offset_;          // attr -> first global context id
  std::vector<std::int64_t> ctx_count_;  // by global context id
};

// P(clean | observed) over the candidate set: softmax of
// exp(gamma * feature_sum) restricted to the candidates. `clean` must be one
// of the candidates (compared by values); the candidate list must be
// non-empty.
double likelihood(const Tuple& observed, const Tuple& clean, const ErrorParams& p,
                  const ErrorContext& ctx, const std::vector<Tuple>& candidates);

// Per-value retention rates estimated by self-cleaning the sample: for each
// value v an attribute's cleaner produced, the fraction of those rows whose
// observed value already was v. Values the cleaner never produced fall back to
// the attribute's frequency-weighted mean.
struct ErrorStats {
  std::vector<std::unordered_map<std::string, double>> per_value;
  std::vector<double> per_attribute;

  double retention(int attr, const std::string& v) const {
    const auto& m = per_value[attr];
    if (auto it = m.find(v); it != m.end()) return it->second;
    return per_attribute[attr];
  }
};

ErrorStats learn_error_stats(const Dataset& sample,
                             const std::function<Tuple(const Tuple&)>& cleaner);

}  // namespace probwipe
