#include "doctest.h"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "probwipe/error_model.hpp"
#include "probwipe/eval.hpp"
#include "support/synthetic.hpp"

using namespace probwipe;
using probwipe::testing::car_snapshot;
using probwipe::testing::make_dataset;
using probwipe::testing::make_synthetic;

namespace {

NoiseSpec spec_of(double rate, std::array<double, 3> mix, std::uint64_t seed) {
  NoiseSpec s;
  s.rate = rate;
  s.mix = mix;
  s.seed = seed;
  return s;
}

std::int64_t differing_cells(const Dataset& a, const Dataset& b) {
  std::int64_t n = 0;
  for (std::size_t r = 0; r < a.rows.size(); ++r)
    for (std::size_t i = 0; i < a.schema.size(); ++i)
      if (a.rows[r].values[i] != b.rows[r].values[i]) ++n;
  return n;
}

}  // namespace

TEST_CASE("zero rate copies the data, full deletion empties every live cell") {
  const Dataset truth = car_snapshot();

  const Dataset same = inject_noise(truth, spec_of(0.0, {1, 1, 1}, 3));
  REQUIRE(same.rows.size() == truth.rows.size());
  CHECK(differing_cells(same, truth) == 0);
  for (std::size_t r = 0; r < truth.rows.size(); ++r) CHECK(same.rows[r].id == truth.rows[r].id);

  const Dataset gone = inject_noise(truth, spec_of(1.0, {0, 0, 1}, 3));
  for (const auto& row : gone.rows)
    for (const auto& v : row.values) CHECK(v.empty());
}

TEST_CASE("typos are short edits that leave the domain") {
  const Dataset truth = make_synthetic(40, 3);
  const Dataset dirty = inject_noise(truth, spec_of(1.0, {1, 0, 0}, 7));
  for (std::size_t r = 0; r < truth.rows.size(); ++r)
    for (std::size_t i = 0; i < truth.schema.size(); ++i) {
      const std::string& orig = truth.rows[r].values[i];
      const std::string& noisy = dirty.rows[r].values[i];
      CHECK(noisy != orig);
      const int d = levenshtein(orig, noisy);
      CHECK(d >= 1);
      CHECK(d <= 4);
      CHECK(truth.schema.value_index(i, noisy) == -1);
    }
}

TEST_CASE("substitutions stay in the domain but change the value") {
  const Dataset truth = make_synthetic(40, 3);
  const Dataset dirty = inject_noise(truth, spec_of(1.0, {0, 1, 0}, 7));
  for (std::size_t r = 0; r < truth.rows.size(); ++r)
    for (std::size_t i = 0; i < truth.schema.size(); ++i) {
      const std::string& orig = truth.rows[r].values[i];
      const std::string& noisy = dirty.rows[r].values[i];
      CHECK(noisy != orig);
      CHECK(truth.schema.value_index(i, noisy) >= 0);
    }

  // A single-value domain has nothing to substitute; a typo happens instead.
  const Dataset tiny = make_dataset({"A"}, {{"v"}, {"v"}});
  const Dataset td = inject_noise(tiny, spec_of(1.0, {0, 1, 0}, 7));
  for (const auto& row : td.rows) {
    CHECK(row.values[0] != "v");
    CHECK(!row.values[0].empty());
    CHECK(levenshtein(row.values[0], "v") <= 4);
  }
}

TEST_CASE("corruption volume tracks the rate") {
  const Dataset truth = make_synthetic(2000, 8);
  const Dataset dirty = inject_noise(truth, spec_of(0.2, {1, 1, 1}, 13));
  const std::int64_t changed = differing_cells(dirty, truth);
  // 12000 cells at rate 0.2, three sigma around the mean of 2400.
  CHECK(changed >= 2268);
  CHECK(changed <= 2532);
}

TEST_CASE("noise is deterministic per seed and leaves the input alone") {
  const Dataset truth = make_synthetic(100, 2);
  const std::string before = to_csv_text(truth);
  const Dataset a = inject_noise(truth, spec_of(0.3, {1, 1, 1}, 5));
  const Dataset b = inject_noise(truth, spec_of(0.3, {1, 1, 1}, 5));
  const Dataset c = inject_noise(truth, spec_of(0.3, {1, 1, 1}, 6));
  CHECK(to_csv_text(truth) == before);
  CHECK(to_csv_text(a) == to_csv_text(b));
  CHECK(to_csv_text(a) != to_csv_text(c));
}

TEST_CASE("noise parameter validation") {
  const Dataset truth = make_synthetic(5, 1);
  CHECK_THROWS_AS(inject_noise(truth, spec_of(-0.1, {1, 1, 1}, 1)), std::invalid_argument);
  CHECK_THROWS_AS(inject_noise(truth, spec_of(1.1, {1, 1, 1}, 1)), std::invalid_argument);
  CHECK_THROWS_AS(inject_noise(truth, spec_of(0.5, {1, -1, 1}, 1)), std::invalid_argument);
  CHECK_THROWS_AS(inject_noise(truth, spec_of(0.5, {0, 0, 0}, 1)), std::invalid_argument);
}

TEST_CASE("offline scoring counts repairs and collateral damage") {
  const Dataset truth = make_dataset({"A", "B"}, {{"a", "b"}, {"c", "d"}, {"e", "f"}});
  const Dataset dirty = make_dataset({"A", "B"}, {{"X", "b"}, {"c", "Y"}, {"Z", "f"}});
  const Dataset cleaned = make_dataset({"A", "B"}, {{"a", "b"}, {"c", "d"}, {"Z", "q"}});

  const OfflineEval ev = evaluate_offline(cleaned, dirty, truth);
  CHECK(ev.injected == 3);
  CHECK(ev.values_corrected == 2);
  CHECK(ev.false_positives == 1);
  CHECK(ev.net_gain == 1);
  CHECK(ev.pct_corrupt_cleaned == doctest::Approx(2.0 / 3.0));

  Dataset misaligned = cleaned;
  misaligned.rows[0].id = 5;
  CHECK_THROWS_AS(evaluate_offline(misaligned, dirty, truth), std::invalid_argument);

  const Dataset short_rows = make_dataset({"A", "B"}, {{"a", "b"}});
  CHECK_THROWS_AS(evaluate_offline(short_rows, dirty, truth), std::invalid_argument);
  const Dataset narrow = make_dataset({"A"}, {{"a"}, {"c"}, {"e"}});
  CHECK_THROWS_AS(evaluate_offline(narrow, dirty, truth), std::invalid_argument);
}

TEST_CASE("a perfect ranker scores 1.0 at every recall level") {
  const Dataset truth = make_synthetic(30, 4);
  const RankedIdsFn perfect = [&](const Query& q) {
    std::vector<std::int64_t> ids;
    for (const auto& row : truth.rows)
      if (satisfies(row, q)) ids.push_back(row.id);
    return ids;
  };

  const QueryEval ev = evaluate_queries(perfect, perfect, truth, 5, 5, 11);
  CHECK(ev.num_queries == 5);
  CHECK(ev.k == 5);
  REQUIRE(ev.recall_levels.size() == 11);
  CHECK(ev.recall_levels.front() == 0.0);
  CHECK(ev.recall_levels.back() == 1.0);
  for (double p : ev.system_precision) CHECK(p == 1.0);
  for (double p : ev.baseline_precision) CHECK(p == 1.0);
  CHECK(ev.system_p_at_k == 1.0);
  CHECK(ev.baseline_p_at_k == 1.0);
}

TEST_CASE("precision at recall levels on a hand-ranked list") {
  // Both rows match every possible query, so the relevant set is {0, 1}.
  const Dataset truth = make_dataset({"A"}, {{"v"}, {"v"}});
  const RankedIdsFn noisy_ranker = [](const Query&) {
    return std::vector<std::int64_t>{0, 77, 1};
  };
  const RankedIdsFn empty_ranker = [](const Query&) { return std::vector<std::int64_t>{}; };

  const QueryEval ev = evaluate_queries(noisy_ranker, empty_ranker, truth, 3, 2, 5);
  REQUIRE(ev.system_precision.size() == 11);
  for (int l = 0; l <= 5; ++l) CHECK(ev.system_precision[l] == doctest::Approx(1.0));
  for (int l = 6; l <= 10; ++l)
    CHECK(ev.system_precision[l] == doctest::Approx(2.0 / 3.0));
  CHECK(ev.system_p_at_k == doctest::Approx(0.5));
  for (double p : ev.baseline_precision) CHECK(p == 0.0);
  CHECK(ev.baseline_p_at_k == 0.0);

  // A truncated ranker never reaches the upper recall levels.
  const RankedIdsFn half = [](const Query&) { return std::vector<std::int64_t>{0}; };
  const QueryEval ev2 = evaluate_queries(half, empty_ranker, truth, 2, 2, 5);
  for (int l = 0; l <= 5; ++l) CHECK(ev2.system_precision[l] == doctest::Approx(1.0));
  for (int l = 6; l <= 10; ++l) CHECK(ev2.system_precision[l] == 0.0);
  CHECK(ev2.system_p_at_k == doctest::Approx(1.0));
}

TEST_CASE("query evaluation argument checks") {
  const Dataset truth = make_dataset({"A"}, {{"v"}});
  const RankedIdsFn nop = [](const Query&) { return std::vector<std::int64_t>{}; };
  CHECK_THROWS_AS(evaluate_queries(nop, nop, truth, 0, 2, 1), std::invalid_argument);
  CHECK_THROWS_AS(evaluate_queries(nop, nop, truth, 2, 0, 1), std::invalid_argument);
  const Dataset empty = make_dataset({"A"}, {});
  CHECK_THROWS_AS(evaluate_queries(nop, nop, empty, 2, 2, 1), std::invalid_argument);
  const Dataset holes = make_dataset({"A"}, {{""}});
  CHECK_THROWS_AS(evaluate_queries(nop, nop, holes, 2, 2, 1), std::invalid_argument);
}
