#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "probwipe/cleaner.hpp"
#include "support/synthetic.hpp"

using namespace probwipe;
using probwipe::testing::car_sample;
using probwipe::testing::car_snapshot;
using probwipe::testing::gamma_switch_sample;
using probwipe::testing::make_dataset;

namespace {

// Owns everything a TupleScorer points at.
struct ScorerBundle {
  Dataset sample;
  BayesNet bn;
  ErrorContext ctx;
  CandidateIndex idx;
  TupleScorer scorer;

  ScorerBundle(Dataset s, const std::vector<std::vector<int>>& dag, ErrorParams params, int j)
      : sample(std::move(s)),
        bn(fit_cpts(sample, dag, 1.0)),
        ctx(sample, params.mu),
        idx(sample, j),
        scorer(bn, ctx, params, idx) {}
};

// Make, Model, Type, Engine, Condition with the frequency skew that makes the
// repair flip as gamma moves.
ScorerBundle switch_bundle(double gamma) {
  return ScorerBundle(gamma_switch_sample(), {{}, {0}, {1}, {1}, {}}, {gamma, 1.0, 0.1}, 3);
}

// Model, Make, Orig, Size, Engine, Condition.
ScorerBundle car_bundle() {
  return ScorerBundle(car_sample(10), {{1}, {}, {1}, {0}, {0}, {}}, {5.8, 0.638, 0.1}, 3);
}

int count_modified(const Dataset& d, const TupleScorer& scorer) {
  int n = 0;
  for (const auto& row : d.rows)
    if (!same_values(scorer.clean_tuple(row).chosen(), row)) ++n;
  return n;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("low gamma trusts frequency, high gamma trusts the data") {
  ScorerBundle b = switch_bundle(0.5);
  const Tuple frequent{0, {"Honda", "Civic", "Sedan", "V4", "New"}};
  const Tuple rare{0, {"BMW", "Z4", "Sedan", "V6", "New"}};
  const Tuple erroneous{0, {"Honda", "Z4", "Sedan", "V6", "New"}};

  REQUIRE(b.scorer.scorable_candidates(rare).size() == 3);

  // Observed rare-but-correct tuple: at gamma 0.5 the frequent tuple wins,
  // at 5.8 the observation stands.
  const CleanedTuple low = b.scorer.clean_tuple(rare);
  CHECK(low.chosen().values == frequent.values);
  REQUIRE(low.alternatives.size() == 3);
  double total = 0.0;
  for (const auto& [cand, p] : low.alternatives) {
    CHECK(p > 0.0);
    total += p;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  for (std::size_t i = 1; i < low.alternatives.size(); ++i)
    CHECK(low.alternatives[i - 1].second >= low.alternatives[i].second);

  const TupleScorer high = b.scorer.with_gamma(5.8);
  CHECK(high.clean_tuple(rare).chosen().values == rare.values);

  // Observed erroneous tuple: corrected at low gamma, kept at high gamma.
  CHECK(b.scorer.clean_tuple(erroneous).chosen().values == frequent.values);
  CHECK(high.clean_tuple(erroneous).chosen().values == erroneous.values);

  // with_gamma shares the feature cache; a fresh scorer must agree exactly.
  ScorerBundle fresh = switch_bundle(5.8);
  const CleanedTuple a = high.clean_tuple(rare);
  const CleanedTuple c = fresh.scorer.clean_tuple(rare);
  REQUIRE(a.alternatives.size() == c.alternatives.size());
  for (std::size_t i = 0; i < a.alternatives.size(); ++i) {
    CHECK(a.alternatives[i].first.values == c.alternatives[i].first.values);
    CHECK(a.alternatives[i].second == c.alternatives[i].second);
  }
}

TEST_CASE("modified-row count is non-increasing in gamma") {
  ScorerBundle b = switch_bundle(0.5);
  CHECK(count_modified(b.sample, b.scorer) == 6);
  CHECK(count_modified(b.sample, b.scorer.with_gamma(2.0)) == 1);
  CHECK(count_modified(b.sample, b.scorer.with_gamma(5.8)) == 0);
}

TEST_CASE("cleaning the car snapshot fixes the typo and the gap") {
  ScorerBundle b = car_bundle();
  const Dataset cleaned = clean_dataset(car_snapshot(), b.scorer);
  REQUIRE(cleaned.rows.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) CHECK(cleaned.rows[i].id == static_cast<std::int64_t>(i));

  const Dataset original = car_snapshot();
  CHECK(cleaned.rows[0].values == original.rows[0].values);
  CHECK(cleaned.rows[1].values == original.rows[1].values);
  CHECK(cleaned.rows[2].values ==
        std::vector<std::string>{"Civic", "Honda", "JPN", "Mid-size", "V4", "USED"});
  CHECK(cleaned.rows[3].values == original.rows[3].values);
  CHECK(cleaned.rows[4].values ==
        std::vector<std::string>{"Civic", "Honda", "JPN", "Mid-size", "V4", "NEW"});
  CHECK(cleaned.rows[5].values == original.rows[5].values);

  // Domains are rebuilt from the cleaned rows; the typo is gone.
  CHECK(cleaned.schema.value_index(0, "Civik") == -1);
}

TEST_CASE("exactly tied repairs break lexicographically") {
  ScorerBundle b(make_dataset({"A", "B"}, {{"a", "x"}, {"b", "x"}}), {{}, {}},
                 {5.8, 0.638, 0.1}, 1);
  const CleanedTuple ct = b.scorer.clean_tuple(Tuple{0, {"c", "x"}});
  REQUIRE(ct.alternatives.size() == 2);
  CHECK(ct.chosen().values == std::vector<std::string>{"a", "x"});
  CHECK(ct.alternatives[0].second == 0.5);
  CHECK(ct.alternatives[1].second == 0.5);
}

TEST_CASE("repair ordering: score, then original, then lexicographic") {
  const Tuple t{0, {"q", "x"}};
  const Tuple self{0, {"q", "x"}};
  const Tuple other{0, {"a", "x"}};
  const Tuple other2{0, {"b", "x"}};
  CHECK(repair_order(2.0, other, 1.0, self, t));       // score dominates
  CHECK(!repair_order(1.0, other, 2.0, self, t));
  CHECK(repair_order(1.0, self, 1.0, other, t));       // tie: the original wins
  CHECK(!repair_order(1.0, other, 1.0, self, t));
  CHECK(repair_order(1.0, other, 1.0, other2, t));     // tie, no original: lexicographic
  CHECK(!repair_order(1.0, other2, 1.0, other, t));
}

TEST_CASE("the unchanged tuple is injected only when valid and absent") {
  ScorerBundle b(make_dataset({"A", "B"}, {{"a", "x"}, {"b", "y"}}), {{}, {}},
                 {5.8, 0.638, 0.1}, 1);
  auto contains_probe = [](const std::vector<Tuple>& cands, const Tuple& probe) {
    for (const auto& c : cands)
      if (same_values(c, probe)) return true;
    return false;
  };

  // In-domain recombination not present in the sample: injected.
  const Tuple fresh{0, {"a", "y"}};
  const auto injected = b.scorer.scorable_candidates(fresh);
  CHECK(injected.size() == 3);
  CHECK(contains_probe(injected, fresh));

  // Already present: not duplicated.
  const Tuple present{0, {"a", "x"}};
  int copies = 0;
  for (const auto& c : b.scorer.scorable_candidates(present))
    if (same_values(c, present)) ++copies;
  CHECK(copies == 1);

  // Out-of-domain value: not injectable.
  const Tuple typo{0, {"zz", "x"}};
  const auto no_self = b.scorer.scorable_candidates(typo);
  CHECK(no_self.size() == 1);
  CHECK(!contains_probe(no_self, typo));

  // Partially missing: not injectable, but still cleanable from the pool.
  const Tuple gap{0, {"", "x"}};
  const auto pool = b.scorer.scorable_candidates(gap);
  REQUIRE(pool.size() == 1);
  CHECK(pool[0].values == std::vector<std::string>{"a", "x"});
  CHECK(b.scorer.clean_tuple(gap).chosen().values == std::vector<std::string>{"a", "x"});
}

TEST_CASE("a tuple with no candidates passes through unclean") {
  ScorerBundle b(make_dataset({"A", "B"}, {{"a", "x"}, {"b", "y"}}), {{}, {}},
                 {5.8, 0.638, 0.1}, 1);
  const Tuple blank{42, {"", ""}};
  const CleanedTuple ct = b.scorer.clean_tuple(blank);
  CHECK(ct.uncleanable);
  CHECK(ct.original_id == 42);
  REQUIRE(ct.alternatives.size() == 1);
  CHECK(ct.alternatives[0].first.values == blank.values);
  CHECK(ct.alternatives[0].second == 1.0);

  const Tuple foreign{7, {"zz", "ww"}};
  CHECK(b.scorer.clean_tuple(foreign).uncleanable);
}

TEST_CASE("determinization by threshold keeps strictly-above alternatives") {
  Pdb pdb;
  pdb.schema = make_dataset({"A"}, {{"X"}}).schema;
  pdb.rows.push_back({7, {{Tuple{0, {"X"}}, 0.6}, {Tuple{0, {"Y"}}, 0.4}}, false});
  pdb.rows.push_back(
      {9, {{Tuple{0, {"V"}}, 0.4}, {Tuple{0, {"W"}}, 0.3}, {Tuple{0, {"Z"}}, 0.3}}, false});

  const Dataset mid = determinize_threshold(pdb, 0.35);
  REQUIRE(mid.rows.size() == 3);
  CHECK(mid.rows[0].values[0] == "X");
  CHECK(mid.rows[1].values[0] == "Y");
  CHECK(mid.rows[2].values[0] == "V");
  CHECK(mid.rows[0].id == 0);
  CHECK(mid.rows[1].id == 1);
  CHECK(mid.rows[2].id == 2);

  const Dataset strict = determinize_threshold(pdb, 0.4);  // 0.4 itself is excluded
  REQUIRE(strict.rows.size() == 1);
  CHECK(strict.rows[0].values[0] == "X");
  CHECK(strict.schema.domains[0] == std::vector<std::string>{"X"});

  CHECK(determinize_threshold(pdb, 0.0).rows.size() == 5);
  CHECK_THROWS_AS(determinize_threshold(pdb, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(determinize_threshold(pdb, 1.0), std::invalid_argument);
}

TEST_CASE("determinization by top-k") {
  Pdb pdb;
  pdb.schema = make_dataset({"A"}, {{"X"}}).schema;
  pdb.rows.push_back({7, {{Tuple{0, {"X"}}, 0.6}, {Tuple{0, {"Y"}}, 0.4}}, false});
  pdb.rows.push_back(
      {9, {{Tuple{0, {"V"}}, 0.4}, {Tuple{0, {"W"}}, 0.3}, {Tuple{0, {"Z"}}, 0.3}}, false});

  const Dataset best = determinize_topk(pdb, 1);
  REQUIRE(best.rows.size() == 2);
  CHECK(best.rows[0].values[0] == "X");
  CHECK(best.rows[1].values[0] == "V");

  CHECK(determinize_topk(pdb, 2).rows.size() == 4);
  CHECK(determinize_topk(pdb, 99).rows.size() == 5);
  CHECK_THROWS_AS(determinize_topk(pdb, 0), std::invalid_argument);
}

TEST_CASE("pdb files round-trip with six-decimal probabilities") {
  ScorerBundle b = car_bundle();
  const Pdb pdb = clean_dataset_pdb(car_snapshot(), b.scorer);
  REQUIRE(pdb.rows.size() == 6);

  const std::string path = "tmp_pdb_roundtrip.jsonl";
  save_pdb_jsonl(pdb, path);

  // Every probability in the file is printed with exactly six decimals.
  const std::string text = slurp(path);
  std::size_t pos = 0, seen = 0;
  while ((pos = text.find("\"p\":", pos)) != std::string::npos) {
    pos += 4;
    const std::size_t end = text.find_first_of(",}", pos);
    REQUIRE(end != std::string::npos);
    const std::string num = text.substr(pos, end - pos);
    const std::size_t dot = num.find('.');
    REQUIRE(dot != std::string::npos);
    CHECK(num.size() - dot - 1 == 6);
    ++seen;
  }
  CHECK(seen > 0);

  const Pdb back = load_pdb_jsonl(path, pdb.schema);
  REQUIRE(back.rows.size() == pdb.rows.size());
  for (std::size_t r = 0; r < pdb.rows.size(); ++r) {
    CHECK(back.rows[r].original_id == pdb.rows[r].original_id);
    REQUIRE(back.rows[r].alternatives.size() == pdb.rows[r].alternatives.size());
    for (std::size_t a = 0; a < pdb.rows[r].alternatives.size(); ++a) {
      CHECK(back.rows[r].alternatives[a].first.values == pdb.rows[r].alternatives[a].first.values);
      CHECK(std::abs(back.rows[r].alternatives[a].second - pdb.rows[r].alternatives[a].second) <=
            5.1e-7);
    }
  }

  const std::string path2 = "tmp_pdb_roundtrip2.jsonl";
  save_pdb_jsonl(back, path2);
  CHECK(slurp(path2) == text);
  std::remove(path.c_str());
  std::remove(path2.c_str());
}

TEST_CASE("pdb loading rejects malformed lines") {
  const Schema schema = make_dataset({"A", "B"}, {{"a", "b"}}).schema;
  auto write_and_load = [&](const std::string& content) {
    const std::string path = "tmp_pdb_bad.jsonl";
    std::ofstream(path, std::ios::binary) << content;
    Pdb p = load_pdb_jsonl(path, schema);
    std::remove(path.c_str());
    return p;
  };

  CHECK_THROWS_AS(write_and_load("not json\n"), DataError);
  CHECK_THROWS_AS(write_and_load("{\"original_id\":1}\n"), DataError);
  CHECK_THROWS_AS(write_and_load("{\"original_id\":1,\"alternatives\":[]}\n"), DataError);
  CHECK_THROWS_AS(
      write_and_load("{\"original_id\":1,\"alternatives\":[{\"values\":[\"a\"],\"p\":0.5}]}\n"),
      DataError);
  CHECK_THROWS_AS(
      write_and_load("{\"original_id\":1,\"alternatives\":[{\"values\":[\"a\",\"b\"]}]}\n"),
      DataError);
  CHECK_THROWS_AS(load_pdb_jsonl("definitely_missing.jsonl", schema), DataError);

  const Pdb ok = write_and_load(
      "{\"original_id\":0,\"alternatives\":[{\"values\":[\"a\",\"b\"],\"p\":1.0}]}\n"
      "\n"
      "{\"original_id\":1,\"alternatives\":[{\"values\":[\"a\",\"b\"],\"p\":1.0}]}\n");
  CHECK(ok.rows.size() == 2);  // blank lines are skipped
}

TEST_CASE("top-1 determinization of the pdb equals direct cleaning") {
  ScorerBundle b = car_bundle();
  const Dataset direct = clean_dataset(car_snapshot(), b.scorer);
  const Dataset via_pdb = determinize_topk(clean_dataset_pdb(car_snapshot(), b.scorer), 1);
  CHECK(to_csv_text(via_pdb) == to_csv_text(direct));
}

TEST_CASE("gamma calibration bisects to the modification-fraction crossover") {
  ScorerBundle b = switch_bundle(5.8);

  // 6 of 406 rows move at the low end, so a large target returns the floor.
  CHECK(calibrate_gamma(b.sample, b.scorer, 0.5) == 0.2);

  // Crossing 0.004 happens where the rare-correct rows stop moving.
  const double g1 = calibrate_gamma(b.sample, b.scorer, 0.004);
  CHECK(g1 > 1.5);
  CHECK(g1 < 2.0);

  // Crossing 0.002 happens where the single erroneous row stops moving.
  const double g2 = calibrate_gamma(b.sample, b.scorer, 0.002);
  CHECK(g2 > 3.0);
  CHECK(g2 < 3.7);

  // Truncated to one row (the frequent tuple) nothing ever moves.
  CHECK(calibrate_gamma(b.sample, b.scorer, 0.3, 1) == 0.2);

  CHECK_THROWS_AS(calibrate_gamma(b.sample, b.scorer, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(calibrate_gamma(b.sample, b.scorer, 1.0), std::invalid_argument);
  const Dataset empty = make_dataset({"A"}, {});
  CHECK_THROWS_AS(calibrate_gamma(empty, b.scorer, 0.1), std::invalid_argument);
}
