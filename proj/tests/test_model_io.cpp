#include "doctest.h"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <stdexcept>
#include <string>

#include "probwipe/model_io.hpp"
#include "support/synthetic.hpp"

using namespace probwipe;
using probwipe::testing::car_sample;
using probwipe::testing::car_snapshot;
using probwipe::testing::make_dataset;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void spit(const std::string& path, const std::string& content) {
  std::ofstream(path, std::ios::binary) << content;
}

Config quick_config(std::uint64_t seed) {
  Config cfg;
  cfg.seed = seed;
  cfg.restarts = 1;
  return cfg;
}

}  // namespace

TEST_CASE("model artifacts serialize deterministically and round-trip") {
  const ModelArtifact artifact = learn_models(car_sample(10), quick_config(42));
  const std::string text = model_to_json_text(artifact);
  CHECK(model_to_json_text(learn_models(car_sample(10), quick_config(42))) == text);

  const std::string path = "tmp_model_roundtrip.json";
  save_model(artifact, path);
  CHECK(slurp(path) == text + "\n");

  const ModelArtifact loaded = load_model(path);
  CHECK(model_to_json_text(loaded) == text);
  std::remove(path.c_str());
}

TEST_CASE("a reloaded model cleans exactly like the original") {
  const std::string path = "tmp_model_parity.json";
  save_model(learn_models(car_sample(10), quick_config(7)), path);

  Runtime fresh = build_runtime(learn_models(car_sample(10), quick_config(7)));
  Runtime reloaded = build_runtime(load_model(path));
  const Dataset dirty = car_snapshot();
  CHECK(to_csv_text(clean_dataset(dirty, *fresh.scorer)) ==
        to_csv_text(clean_dataset(dirty, *reloaded.scorer)));
  std::remove(path.c_str());
}

TEST_CASE("learned models repair the car snapshot") {
  Runtime rt = build_runtime(learn_models(car_sample(10), quick_config(1)));
  CHECK(rt.artifact.sample.rows.size() == 60);
  const Dataset cleaned = clean_dataset(car_snapshot(), *rt.scorer);
  CHECK(cleaned.rows[2].values[0] == "Civic");
  CHECK(cleaned.rows[4].values[0] == "Civic");
}

TEST_CASE("sampling fraction is honored and frozen into the artifact") {
  Config cfg = quick_config(3);
  cfg.sample_fraction = 0.5;
  const ModelArtifact artifact = learn_models(car_sample(10), cfg);
  CHECK(artifact.sample.rows.size() == 30);
  CHECK(artifact.config.sample_fraction == 0.5);
}

TEST_CASE("version and format tampering is rejected") {
  const std::string path = "tmp_model_tamper.json";
  save_model(learn_models(car_sample(2), quick_config(5)), path);

  std::string text = slurp(path);
  const std::size_t at = text.find("\"version\": 1");
  REQUIRE(at != std::string::npos);
  text.replace(at, 12, "\"version\": 99");
  spit(path, text);
  CHECK_THROWS_AS(load_model(path), DataError);

  spit(path, "{\"nota\":\"model\"}");
  CHECK_THROWS_AS(load_model(path), DataError);
  spit(path, "complete garbage");
  CHECK_THROWS_AS(load_model(path), DataError);
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_model("definitely_missing_model.json"), DataError);
}

TEST_CASE("learning refuses an empty sample") {
  const Dataset empty = make_dataset({"A"}, {});
  CHECK_THROWS_WITH_AS(learn_models(empty, quick_config(1)), "learn: empty sample", DataError);
}

TEST_CASE("configuration ranges") {
  Config cfg;
  CHECK_NOTHROW(cfg.validate());

  auto rejects = [](auto&& tweak) {
    Config c;
    tweak(c);
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  };
  rejects([](Config& c) { c.sample_fraction = 0.0; });
  rejects([](Config& c) { c.sample_fraction = 1.1; });
  rejects([](Config& c) { c.j = -1; });
  rejects([](Config& c) { c.gamma = 0.0; });
  rejects([](Config& c) { c.gamma = 64.5; });
  rejects([](Config& c) { c.delta = -0.1; });
  rejects([](Config& c) { c.delta = 1.1; });
  rejects([](Config& c) { c.mu = 0.0; });
  rejects([](Config& c) { c.alpha = 0.0; });
  rejects([](Config& c) { c.max_parents = -1; });
  rejects([](Config& c) { c.restarts = -1; });
  rejects([](Config& c) { c.beam = 0; });
  rejects([](Config& c) { c.esq_count = 0; });
  rejects([](Config& c) { c.esq_target_size = -1; });
  rejects([](Config& c) { c.confidence = -0.1; });
  rejects([](Config& c) { c.confidence = 1.1; });
  rejects([](Config& c) { c.k = 0; });

  Config edge;
  edge.gamma = 64.0;
  edge.delta = 1.0;
  edge.confidence = 0.0;
  edge.sample_fraction = 1.0;
  CHECK_NOTHROW(edge.validate());

  // Learning validates before touching the data.
  Config bad = quick_config(1);
  bad.gamma = -1.0;
  CHECK_THROWS_AS(learn_models(car_sample(1), bad), std::invalid_argument);
}

TEST_CASE("the seed environment override") {
  unsetenv("PROBWIPE_SEED");
  CHECK(seed_from_env(7) == 7);
  setenv("PROBWIPE_SEED", "123", 1);
  CHECK(seed_from_env(7) == 123);
  setenv("PROBWIPE_SEED", "0", 1);
  CHECK(seed_from_env(7) == 0);
  setenv("PROBWIPE_SEED", "abc", 1);
  CHECK(seed_from_env(7) == 7);
  setenv("PROBWIPE_SEED", "12x", 1);
  CHECK(seed_from_env(7) == 7);
  setenv("PROBWIPE_SEED", "", 1);
  CHECK(seed_from_env(7) == 7);
  unsetenv("PROBWIPE_SEED");
}
