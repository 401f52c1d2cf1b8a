#include "probwipe/model_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace probwipe {

using nlohmann::json;

namespace {

json config_to_json(const Config& c) {
  return json{{"sample_fraction", c.sample_fraction},
              {"j", c.j},
              {"gamma", c.gamma},
              {"delta", c.delta},
              {"mu", c.mu},
              {"alpha", c.alpha},
              {"max_parents", c.max_parents},
              {"restarts", c.restarts},
              {"beam", c.beam},
              {"esq_count", c.esq_count},
              {"esq_target_size", c.esq_target_size},
              {"confidence", c.confidence},
              {"k", c.k},
              {"seed", c.seed}};
}

Config config_from_json(const json& j) {
  Config c;
  c.sample_fraction = j.at("sample_fraction").get<double>();
  c.j = j.at("j").get<int>();
  c.gamma = j.at("gamma").get<double>();
  c.delta = j.at("delta").get<double>();
  c.mu = j.at("mu").get<double>();
  c.alpha = j.at("alpha").get<double>();
  c.max_parents = j.at("max_parents").get<int>();
  c.restarts = j.at("restarts").get<int>();
  c.beam = j.at("beam").get<int>();
  c.esq_count = j.at("esq_count").get<int>();
  c.esq_target_size = j.at("esq_target_size").get<int>();
  c.confidence = j.at("confidence").get<double>();
  c.k = j.at("k").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

json schema_to_json(const Schema& s) {
  return json{{"attributes", s.attributes}, {"domains", s.domains}};
}

Schema schema_from_json(const json& j) {
  Schema s;
  s.attributes = j.at("attributes").get<std::vector<std::string>>();
  s.domains = j.at("domains").get<std::vector<std::vector<std::string>>>();
  if (s.domains.size() != s.attributes.size()) throw DataError("model: schema shape mismatch");
  return s;
}

json net_to_json(const BayesNet& bn) {
  json families = json::array();
  for (const auto& fam : bn.families()) {
    // Sorted key order keeps serialization byte-stable.
    std::vector<std::pair<std::uint64_t, std::int64_t>> joint(fam.joint.begin(), fam.joint.end());
    std::sort(joint.begin(), joint.end());
    std::vector<std::pair<std::uint64_t, std::int64_t>> totals(fam.combo_total.begin(),
                                                               fam.combo_total.end());
    std::sort(totals.begin(), totals.end());
    families.push_back(json{{"joint", joint}, {"combo_total", totals}});
  }
  json pooling = json::array();
  for (const auto& pool : bn.value_pooling()) pooling.push_back(pool.code);
  return json{{"parents", bn.parents()},
              {"alpha", bn.alpha()},
              {"pooling", pooling},
              {"families", families}};
}

BayesNet net_from_json(const json& j, Schema schema) {
  auto parents = j.at("parents").get<std::vector<std::vector<int>>>();
  auto pooling = j.at("pooling").get<std::vector<std::vector<int>>>();
  std::vector<BayesNet::Family> families;
  for (const auto& f : j.at("families")) {
    BayesNet::Family fam;
    for (const auto& [key, count] :
         f.at("joint").get<std::vector<std::pair<std::uint64_t, std::int64_t>>>())
      fam.joint.emplace(key, count);
    for (const auto& [key, count] :
         f.at("combo_total").get<std::vector<std::pair<std::uint64_t, std::int64_t>>>())
      fam.combo_total.emplace(key, count);
    families.push_back(std::move(fam));
  }
  return assemble_net(std::move(schema), std::move(parents), std::move(pooling),
                      std::move(families), j.at("alpha").get<double>());
}

json stats_to_json(const ErrorStats& stats) {
  json per_value = json::array();
  for (const auto& attr_map : stats.per_value) {
    std::vector<std::pair<std::string, double>> entries(attr_map.begin(), attr_map.end());
    std::sort(entries.begin(), entries.end());
    per_value.push_back(entries);
  }
  return json{{"per_value", per_value}, {"per_attribute", stats.per_attribute}};
}

ErrorStats stats_from_json(const json& j) {
  ErrorStats stats;
  for (const auto& attr_entries : j.at("per_value")) {
    std::unordered_map<std::string, double> m;
    for (const auto& [value, rate] :
         attr_entries.get<std::vector<std::pair<std::string, double>>>())
      m.emplace(value, rate);
    stats.per_value.push_back(std::move(m));
  }
  stats.per_attribute = j.at("per_attribute").get<std::vector<double>>();
  if (stats.per_attribute.size() != stats.per_value.size())
    throw DataError("model: retention stats shape mismatch");
  return stats;
}

}  // namespace

std::string model_to_json_text(const ModelArtifact& artifact) {
  json sample_rows = json::array();
  json sample_ids = json::array();
  for (const auto& row : artifact.sample.rows) {
    sample_ids.push_back(row.id);
    sample_rows.push_back(row.values);
  }
  const json doc{{"version", kModelVersion},
                 {"config", config_to_json(artifact.config)},
                 {"schema", schema_to_json(artifact.sample.schema)},
                 {"sample", json{{"ids", sample_ids}, {"rows", sample_rows}}},
                 {"bayes_net", net_to_json(artifact.bn)},
                 {"error_stats", stats_to_json(artifact.stats)}};
  return doc.dump(1);
}

void save_model(const ModelArtifact& artifact, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << model_to_json_text(artifact) << '\n';
}

ModelArtifact load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw DataError("model '" + path + "': " + e.what());
  }
  try {
    if (!doc.contains("version") || !doc.at("version").is_number_integer())
      throw DataError("model '" + path + "': missing version");
    const int version = doc.at("version").get<int>();
    if (version != kModelVersion)
      throw DataError("model '" + path + "': version " + std::to_string(version) +
                      " is not supported (expected " + std::to_string(kModelVersion) + ")");

    ModelArtifact artifact;
    artifact.config = config_from_json(doc.at("config"));
    Schema schema = schema_from_json(doc.at("schema"));
    artifact.sample.schema = schema;
    const auto ids = doc.at("sample").at("ids").get<std::vector<std::int64_t>>();
    const auto rows = doc.at("sample").at("rows").get<std::vector<std::vector<std::string>>>();
    if (ids.size() != rows.size()) throw DataError("model: sample shape mismatch");
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (rows[i].size() != schema.size()) throw DataError("model: sample arity mismatch");
      artifact.sample.rows.push_back(Tuple{ids[i], rows[i]});
    }
    artifact.bn = net_from_json(doc.at("bayes_net"), std::move(schema));
    artifact.stats = stats_from_json(doc.at("error_stats"));
    if (artifact.stats.per_attribute.size() != artifact.sample.schema.size())
      throw DataError("model: retention stats arity mismatch");
    return artifact;
  } catch (const json::exception& e) {
    throw DataError("model '" + path + "': " + e.what());
  }
}

Runtime::Runtime(ModelArtifact a) : artifact(std::move(a)) {
  ctx = std::make_unique<ErrorContext>(artifact.sample, artifact.config.mu);
  idx = std::make_unique<CandidateIndex>(artifact.sample, artifact.config.j);
  ErrorParams params{artifact.config.gamma, artifact.config.delta, artifact.config.mu};
  scorer = std::make_unique<TupleScorer>(artifact.bn, *ctx, params, *idx);
}

Runtime build_runtime(ModelArtifact artifact) { return Runtime(std::move(artifact)); }

ModelArtifact learn_models(const Dataset& input, const Config& config) {
  config.validate();
  ModelArtifact artifact;
  artifact.config = config;
  artifact.sample = sample(input, config.sample_fraction, config.seed);
  if (artifact.sample.rows.empty()) throw DataError("learn: empty sample");

  const auto dag =
      learn_structure(artifact.sample, config.max_parents, config.restarts, config.seed);
  artifact.bn = fit_cpts(artifact.sample, dag, config.alpha);

  ErrorContext ctx(artifact.sample, config.mu);
  CandidateIndex idx(artifact.sample, config.j);
  ErrorParams params{config.gamma, config.delta, config.mu};
  TupleScorer scorer(artifact.bn, ctx, params, idx);
  artifact.stats = learn_error_stats(
      artifact.sample, [&](const Tuple& t) { return scorer.clean_tuple(t).chosen(); });
  return artifact;
}

}  // namespace probwipe
