// probwipe: learn a source model and an error model from noisy categorical
// data, then repair datasets offline, answer queries over the dirty data
// directly, simulate the sharded pipeline, or benchmark against injected
// noise.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "probwipe/cleaner.hpp"
#include "probwipe/config.hpp"
#include "probwipe/eval.hpp"
#include "probwipe/model_io.hpp"
#include "probwipe/query_engine.hpp"
#include "probwipe/shard_sim.hpp"

namespace {

using namespace probwipe;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitInternal = 4;

struct CommonOpts {
  std::string input;
  bool no_header = false;
};

void add_config_flags(CLI::App* cmd, Config& cfg) {
  cmd->add_option("--sample-fraction", cfg.sample_fraction, "Learning sample fraction (0, 1]");
  cmd->add_option("--j", cfg.j, "Candidate radius (differing cells)");
  cmd->add_option("--gamma", cfg.gamma, "Error-weight sharpness");
  cmd->add_option("--delta", cfg.delta, "Edit-distance vs distributional balance");
  cmd->add_option("--mu", cfg.mu, "Distributional smoothing");
  cmd->add_option("--alpha", cfg.alpha, "CPT smoothing");
  cmd->add_option("--max-parents", cfg.max_parents, "Structure search parent cap");
  cmd->add_option("--restarts", cfg.restarts, "Structure search restarts");
  cmd->add_option("--seed", cfg.seed, "RNG seed (PROBWIPE_SEED overrides)");
}

void check_schema_match(const ModelArtifact& artifact, const Dataset& input) {
  if (artifact.sample.schema.attributes != input.schema.attributes)
    throw DataError("model was learned on a different schema than the input");
}

int cmd_learn(const CommonOpts& common, const std::string& output, Config cfg,
              std::optional<double> calibrate_target) {
  cfg.seed = seed_from_env(cfg.seed);
  const Dataset input = load_csv(common.input, !common.no_header);
  ModelArtifact artifact = learn_models(input, cfg);
  if (calibrate_target) {
    Runtime rt = build_runtime(std::move(artifact));
    const double gamma = calibrate_gamma(rt.artifact.sample, *rt.scorer, *calibrate_target);
    rt.artifact.config.gamma = gamma;
    // Retention stats were bootstrapped at the configured gamma; refresh them
    // at the calibrated one so the artifact is self-consistent.
    const TupleScorer recal = rt.scorer->with_gamma(gamma);
    rt.artifact.stats = learn_error_stats(
        rt.artifact.sample, [&](const Tuple& t) { return recal.clean_tuple(t).chosen(); });
    artifact = std::move(rt.artifact);
    std::cerr << "calibrated gamma = " << gamma << "\n";
  }
  save_model(artifact, output);
  return kExitOk;
}

int cmd_clean(const CommonOpts& common, const std::string& model_path, const std::string& mode,
              const std::string& output, std::optional<double> gamma_override) {
  const Dataset input = load_csv(common.input, !common.no_header);
  Runtime rt = build_runtime(load_model(model_path));
  check_schema_match(rt.artifact, input);
  const TupleScorer& scorer =
      gamma_override ? rt.scorer->with_gamma(*gamma_override) : *rt.scorer;
  if (mode == "det") {
    save_csv(clean_dataset(input, scorer), output);
  } else {
    save_pdb_jsonl(clean_dataset_pdb(input, scorer), output);
  }
  return kExitOk;
}

int cmd_determinize(const std::string& pdb_path, const std::string& model_path,
                    const std::string& output, std::optional<double> threshold,
                    std::optional<int> topk) {
  const ModelArtifact artifact = load_model(model_path);
  const Pdb pdb = load_pdb_jsonl(pdb_path, artifact.sample.schema);
  Dataset out = threshold ? determinize_threshold(pdb, *threshold) : determinize_topk(pdb, *topk);
  save_csv(out, output);
  return kExitOk;
}

int cmd_query(const CommonOpts& common, const std::string& model_path,
              const std::vector<std::string>& where, AnswerOptions opt,
              const std::string& output) {
  const Dataset input = load_csv(common.input, !common.no_header);
  Runtime rt = build_runtime(load_model(model_path));
  check_schema_match(rt.artifact, input);

  std::vector<std::pair<std::string, std::string>> constraints;
  for (const auto& w : where) {
    const auto eq = w.find('=');
    if (eq == std::string::npos || eq == 0)
      throw std::invalid_argument("--where expects attr=value, got '" + w + "'");
    constraints.emplace_back(w.substr(0, eq), w.substr(eq + 1));
  }
  const Query q = make_query(input.schema, constraints);

  const auto results = answer(q, input, *rt.scorer, rt.artifact.stats, opt);
  std::ostringstream out;
  for (std::size_t i = 0; i < results.size(); ++i) {
    char score[32];
    std::snprintf(score, sizeof score, "%.9g", results[i].score);
    out << (i + 1) << '\t' << score << '\t' << results[i].tuple.id;
    for (const auto& v : results[i].tuple.values) out << '\t' << v;
    out << '\n';
  }
  if (output.empty()) {
    std::cout << out.str();
  } else {
    std::ofstream f(output, std::ios::binary);
    if (!f) throw DataError("cannot write '" + output + "'");
    f << out.str();
  }
  return kExitOk;
}

int cmd_shardsim(const CommonOpts& common, const std::string& model_path,
                 const std::vector<int>& shards, const std::string& output,
                 const std::string& metrics_path) {
  if (shards.empty()) throw std::invalid_argument("shardsim: --shards needs at least one count");
  const Dataset input = load_csv(common.input, !common.no_header);
  Runtime rt = build_runtime(load_model(model_path));
  check_schema_match(rt.artifact, input);

  nlohmann::json all = nlohmann::json::array();
  Dataset cleaned;
  bool first = true;
  for (int s : shards) {
    ShardMetrics metrics;
    Dataset result = run_sharded_clean(input, *rt.idx, *rt.scorer, s, &metrics);
    if (first) {
      cleaned = std::move(result);
      first = false;
    }
    all.push_back(nlohmann::json{{"num_shards", metrics.num_shards},
                                 {"per_shard_index_bytes", metrics.per_shard_index_bytes},
                                 {"max_index_bytes", metrics.max_index_bytes},
                                 {"stage1_emitted_pairs", metrics.stage1_emitted_pairs}});
  }
  if (!output.empty()) save_csv(cleaned, output);
  if (!metrics_path.empty()) {
    std::ofstream f(metrics_path, std::ios::binary);
    if (!f) throw DataError("cannot write '" + metrics_path + "'");
    f << all.dump(1) << '\n';
  }
  return kExitOk;
}

int cmd_evaluate(const CommonOpts& common, Config cfg, double noise_rate,
                 const std::vector<double>& mix, int queries, const std::string& report_path) {
  cfg.seed = seed_from_env(cfg.seed);
  if (mix.size() != 3)
    throw std::invalid_argument("--mix expects three weights: typo,substitution,deletion");
  const Dataset truth = load_csv(common.input, !common.no_header);

  NoiseSpec spec;
  spec.rate = noise_rate;
  spec.mix = {mix[0], mix[1], mix[2]};
  spec.seed = cfg.seed;
  const Dataset dirty = inject_noise(truth, spec);

  Runtime rt = build_runtime(learn_models(dirty, cfg));
  const Dataset cleaned = clean_dataset(dirty, *rt.scorer);
  const OfflineEval offline = evaluate_offline(cleaned, dirty, truth);

  nlohmann::json report{{"noise_rate", noise_rate},
                        {"gamma", rt.artifact.config.gamma},
                        {"injected", offline.injected},
                        {"values_corrected", offline.values_corrected},
                        {"false_positives", offline.false_positives},
                        {"net_gain", offline.net_gain},
                        {"pct_corrupt_cleaned", offline.pct_corrupt_cleaned}};

  std::printf("noise rate %.3f: injected %lld, corrected %lld, false positives %lld, "
              "net gain %lld (%.1f%% of corruptions cleaned), gamma %.3f\n",
              noise_rate, static_cast<long long>(offline.injected),
              static_cast<long long>(offline.values_corrected),
              static_cast<long long>(offline.false_positives),
              static_cast<long long>(offline.net_gain), 100.0 * offline.pct_corrupt_cleaned,
              rt.artifact.config.gamma);

  if (queries > 0) {
    AnswerOptions opt;
    opt.k = cfg.k;
    opt.confidence = cfg.confidence;
    opt.beam = cfg.beam;
    opt.esq_count = cfg.esq_count;
    opt.target_size = cfg.esq_target_size;
    auto system_fn = [&](const Query& q) {
      std::vector<std::int64_t> ids;
      for (const auto& r : answer(q, dirty, *rt.scorer, rt.artifact.stats, opt))
        ids.push_back(r.tuple.id);
      return ids;
    };
    auto baseline_fn = [&](const Query& q) {
      std::vector<std::int64_t> ids;
      for (const auto& t : baseline_select(q, dirty)) ids.push_back(t.id);
      return ids;
    };
    const QueryEval qe = evaluate_queries(system_fn, baseline_fn, truth, queries, cfg.k,
                                          cfg.seed + 1);
    report["queries"] = nlohmann::json{{"count", qe.num_queries},
                                       {"k", qe.k},
                                       {"recall_levels", qe.recall_levels},
                                       {"system_precision", qe.system_precision},
                                       {"baseline_precision", qe.baseline_precision},
                                       {"system_p_at_k", qe.system_p_at_k},
                                       {"baseline_p_at_k", qe.baseline_p_at_k}};
    std::printf("queries (%d): system P@%d %.3f vs baseline %.3f\n", qe.num_queries, qe.k,
                qe.system_p_at_k, qe.baseline_p_at_k);
  }

  if (!report_path.empty()) {
    std::ofstream f(report_path, std::ios::binary);
    if (!f) throw DataError("cannot write '" + report_path + "'");
    f << report.dump(1) << '\n';
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"probabilistic cleaning of categorical data"};
  app.require_subcommand(1);

  CommonOpts common;
  Config cfg;

  // learn
  auto* learn = app.add_subcommand("learn", "Learn source + error models from a noisy CSV");
  std::string learn_output;
  std::optional<double> calibrate;
  learn->add_option("--input", common.input, "Input CSV")->required();
  learn->add_option("--output", learn_output, "Model artifact path")->required();
  learn->add_flag("--no-header", common.no_header, "Input has no header row");
  add_config_flags(learn, cfg);
  learn->add_option("--calibrate-gamma", calibrate,
                    "Bisect gamma to modify about this fraction of sample rows");

  // clean
  auto* clean = app.add_subcommand("clean", "Repair a CSV with a learned model");
  std::string clean_model, clean_mode = "det", clean_output;
  std::optional<double> clean_gamma;
  clean->add_option("--input", common.input, "Input CSV")->required();
  clean->add_option("--model", clean_model, "Model artifact")->required();
  clean->add_option("--mode", clean_mode, "det (CSV) or pdb (JSON lines)")
      ->check(CLI::IsMember({"det", "pdb"}));
  clean->add_option("--output", clean_output, "Output path")->required();
  clean->add_flag("--no-header", common.no_header, "Input has no header row");
  clean->add_option("--gamma", clean_gamma, "Override the artifact's gamma");

  // determinize
  auto* det = app.add_subcommand("determinize", "Reduce a pdb file to a CSV");
  std::string det_pdb, det_model, det_output;
  std::optional<double> det_threshold;
  std::optional<int> det_topk;
  det->add_option("--pdb", det_pdb, "pdb JSON-lines file")->required();
  det->add_option("--model", det_model, "Model artifact (for the schema)")->required();
  det->add_option("--output", det_output, "Output CSV")->required();
  auto* thr_opt = det->add_option("--threshold", det_threshold,
                                  "Keep alternatives with probability above this");
  det->add_option("--topk", det_topk, "Keep the k best alternatives per row")->excludes(thr_opt);

  // query
  auto* query = app.add_subcommand("query", "Answer a conjunctive query over dirty data");
  std::string query_model, query_output;
  std::vector<std::string> where;
  AnswerOptions aopt;
  query->add_option("--input", common.input, "Dirty CSV")->required();
  query->add_option("--model", query_model, "Model artifact")->required();
  query->add_option("--where", where, "Constraint attr=value (repeatable)")->required();
  query->add_flag("--no-header", common.no_header, "Input has no header row");
  query->add_option("--k", aopt.k, "Results to return");
  query->add_option("--confidence", aopt.confidence, "Stop-rule threshold; 0 runs exhaustively");
  query->add_option("--beam", aopt.beam, "Expansion fan-out");
  query->add_option("--esqs", aopt.esq_count, "Expanded queries to execute");
  query->add_option("--target-size", aopt.target_size, "Constraints per expanded query");
  query->add_option("--output", query_output, "Write TSV here instead of stdout");

  // shardsim
  auto* shard = app.add_subcommand("shardsim", "Run the two-stage sharded cleaning simulation");
  std::string shard_model, shard_output, shard_metrics;
  std::vector<int> shard_counts;
  shard->add_option("--input", common.input, "Dirty CSV")->required();
  shard->add_option("--model", shard_model, "Model artifact")->required();
  shard->add_option("--shards", shard_counts, "Shard counts to simulate")
      ->required()
      ->delimiter(',');
  shard->add_option("--output", shard_output, "Cleaned CSV (from the first shard count)");
  shard->add_option("--metrics", shard_metrics, "Metrics JSON path");
  shard->add_flag("--no-header", common.no_header, "Input has no header row");

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Inject noise into a clean CSV and score recovery");
  double noise_rate = 0.2;
  std::vector<double> mix{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  int queries = 0;
  std::string report_path;
  eval->add_option("--input", common.input, "Clean CSV (ground truth)")->required();
  eval->add_option("--noise-rate", noise_rate, "Per-cell corruption probability");
  eval->add_option("--mix", mix, "Noise mix: typo,substitution,deletion")->delimiter(',');
  eval->add_option("--queries", queries, "Also run this many query evaluations");
  eval->add_option("--report", report_path, "Report JSON path");
  eval->add_flag("--no-header", common.no_header, "Input has no header row");
  add_config_flags(eval, cfg);
  eval->add_option("--k", cfg.k, "Query evaluation depth");
  eval->add_option("--confidence", cfg.confidence, "Query stop-rule threshold");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*learn) return cmd_learn(common, learn_output, cfg, calibrate);
    if (*clean) return cmd_clean(common, clean_model, clean_mode, clean_output, clean_gamma);
    if (*det) {
      if (!det_threshold && !det_topk)
        throw std::invalid_argument("determinize: pass --threshold or --topk");
      return cmd_determinize(det_pdb, det_model, det_output, det_threshold, det_topk);
    }
    if (*query) return cmd_query(common, query_model, where, aopt, query_output);
    if (*shard) return cmd_shardsim(common, shard_model, shard_counts, shard_output, shard_metrics);
    if (*eval) return cmd_evaluate(common, cfg, noise_rate, mix, queries, report_path);
    std::cerr << "no subcommand given\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}
