#include "telephone/cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <set>
#include <thread>

#include "json_io.hpp"
#include "telephone/chain_runner.hpp"
#include "telephone/error.hpp"
#include "telephone/ingest.hpp"
#include "telephone/log.hpp"
#include "telephone/meta_eval.hpp"
#include "telephone/refinery.hpp"
#include "telephone/registry.hpp"
#include "telephone/rotation.hpp"

namespace telephone::cli {

namespace fs = std::filesystem;
using detail::Json;

namespace {

// A stage was invoked before the stage it depends on.
class StageOrderError : public Error {
 public:
  using Error::Error;
};

// Stage sections in pipeline order; rerunning a stage drops the later ones.
constexpr std::array<const char*, 5> kStages = {"plan", "run", "score", "refine", "export"};

struct Globals {
  std::string config;
  fs::path out = "telephone-out";
  std::uint64_t seed = 0;
  std::size_t parallelism = std::max(1u, std::thread::hardware_concurrency());
  bool mock = false;
};

struct Paths {
  fs::path root;
  fs::path manifest() const { return root / "manifest.json"; }
  fs::path plans() const { return root / "plans.json"; }
  fs::path chains() const { return root / "chains.jsonl"; }
  fs::path partial_chains() const { return root / "chains.partial.jsonl"; }
  fs::path cache() const { return root / "cache.jsonl"; }
  fs::path scores() const { return root / "scores"; }
  fs::path refined() const { return root / "refined"; }
  fs::path exports() const { return root / "export"; }
};

Json load_manifest(const Paths& p) {
  if (!fs::exists(p.manifest())) return Json::object();
  return detail::parse_json(detail::read_file(p.manifest()), p.manifest().string());
}

void require_stage(const Json& manifest, const char* stage, const char* command) {
  if (!manifest.contains(stage)) {
    throw StageOrderError(fmt::format("'{}' needs the '{}' stage first (manifest has no '{}' section)", command,
                                      stage, stage));
  }
}

void save_stage(const Paths& p, Json manifest, const char* stage, Json section) {
  const auto pos = std::find_if(kStages.begin(), kStages.end(), [&](const char* s) { return std::string_view(s) == stage; });
  for (auto later = pos + 1; later < kStages.end(); ++later) manifest.erase(*later);
  manifest[stage] = std::move(section);
  // Json sorts keys; the file keeps pipeline order for readers.
  nlohmann::ordered_json ordered = nlohmann::ordered_json::object();
  for (const char* s : kStages) {
    if (manifest.contains(s)) ordered[s] = nlohmann::ordered_json(manifest[s]);
  }
  for (auto it = manifest.begin(); it != manifest.end(); ++it) {
    if (!ordered.contains(it.key())) ordered[it.key()] = nlohmann::ordered_json(it.value());
  }
  fs::create_directories(p.root);
  detail::write_file_atomic(p.manifest(), ordered.dump(2) + "\n");
}

std::vector<fs::path> jsonl_files(const fs::path& dir) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".jsonl") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<RawScoreMatrix> load_matrices(const Paths& p) {
  std::vector<RawScoreMatrix> out;
  for (const auto& f : jsonl_files(p.scores())) out.push_back(read_score_matrix(f));
  if (out.empty()) throw StageOrderError(fmt::format("no score matrices in {}", p.scores().string()));
  return out;
}

Corpus corpus_from_manifest(const Json& manifest) {
  return load_corpus(detail::get_string(manifest.at("run"), "corpus"));
}

std::vector<std::string> translator_ids(std::span<const RotationPlan> plans) {
  std::set<std::string> ids;
  for (const auto& p : plans) {
    for (const auto& h : p.hops) ids.insert(h.translator_id);
  }
  return {ids.begin(), ids.end()};
}

BackendRegistry make_registry(const Globals& g, std::span<const RotationPlan> plans,
                              std::shared_ptr<TranslationCache> cache) {
  if (g.mock) {
    const auto ids = translator_ids(plans);
    return BackendRegistry::mock(ids, g.seed, std::move(cache));
  }
  if (g.config.empty()) throw InvalidArgument("no backend config: pass --config FILE or --mock");
  return BackendRegistry::from_config(detail::read_file(g.config), g.seed, std::move(cache));
}

// ---- plan -----------------------------------------------------------------

struct PlanArgs {
  std::string src, tgt = "en", corpus, kind = "model", diversity = "low", pivot = "en", plan_config, design = "standard";
  std::size_t iterations = 0;
};

int cmd_plan(const Globals& g, const PlanArgs& a, std::ostream& out) {
  PlanConfig config;
  if (!a.plan_config.empty()) {
    config = parse_plan_config(detail::read_file(a.plan_config));
  } else {
    const auto kind = parse_plan_kind(a.kind);
    if (kind == PlanKind::model_rotation) {
      config = default_model_rotation_config();
    } else {
      config = default_language_rotation_config(parse_diversity(a.diversity),
                                                kind == PlanKind::language_rotation_direct, a.pivot);
    }
  }
  if (a.iterations > 0) {
    for (auto& s : config.setups) s.iterations = a.iterations;
  }

  std::vector<std::pair<std::string, std::string>> pairs;
  if (!a.corpus.empty()) {
    const auto corpus = load_corpus(a.corpus);
    for (const auto& r : corpus.records()) {
      std::pair lp{r.source_lang, r.target_lang};
      if (std::find(pairs.begin(), pairs.end(), lp) == pairs.end()) pairs.push_back(lp);
    }
  } else if (!a.src.empty()) {
    pairs.emplace_back(a.src, a.tgt);
  } else {
    throw InvalidArgument("plan needs --src or --corpus");
  }

  std::vector<RotationPlan> plans;
  Json rounds = Json::object();
  for (const auto& [src, tgt] : pairs) {
    auto built = a.design == "standard" ? standard_18_round_plans(src, tgt, config) : build_plans(src, tgt, config);
    std::size_t hops = 0;
    for (const auto& p : built) hops += p.hops.size();
    rounds[src + "-" + tgt] = hops;
    out << fmt::format("{}-{}: {} plan(s), {} translation rounds per sentence\n", src, tgt, built.size(), hops);
    for (auto& p : built) {
      out << fmt::format("  {} ({}, {} iterations):", p.plan_id, to_string(p.kind), p.iteration_count());
      for (const auto& h : p.hops) out << fmt::format(" {}>{}[{}]", h.from_lang, h.to_lang, h.translator_id);
      out << "\n";
      plans.push_back(std::move(p));
    }
  }
  const Paths p{g.out};
  fs::create_directories(p.root);
  write_plans(plans, p.plans());
  Json section;
  section["design"] = a.design;
  section["plan_ids"] = Json::array();
  for (const auto& plan : plans) section["plan_ids"].push_back(plan.plan_id);
  section["rounds_per_sentence"] = rounds;
  save_stage(p, Json::object(), "plan", std::move(section));
  return kExitOk;
}

// ---- run ------------------------------------------------------------------

struct RunArgs {
  std::string corpus;
  bool resume = false;
  std::size_t max_consecutive_failures = 32;
};

int cmd_run(const Globals& g, const RunArgs& a, std::ostream& out) {
  const Paths p{g.out};
  auto manifest = load_manifest(p);
  require_stage(manifest, "plan", a.resume ? "run --resume" : "run");
  std::string corpus_path = a.corpus;
  if (corpus_path.empty() && a.resume && manifest.contains("run")) {
    corpus_path = detail::get_string(manifest.at("run"), "corpus");
  }
  if (corpus_path.empty()) throw InvalidArgument("run needs --corpus");
  corpus_path = fs::absolute(corpus_path).lexically_normal().string();
  const auto corpus = load_corpus(corpus_path);
  const auto plans = read_plans(p.plans());

  auto cache = std::make_shared<TranslationCache>(p.cache());
  const auto registry = make_registry(g, plans, cache);
  for (const auto& id : translator_ids(plans)) registry.translator(id);

  std::vector<TranslationChain> previous;
  if (a.resume) {
    std::vector<TranslationChain> found;
    for (const auto& f : {p.chains(), p.partial_chains()}) {
      if (!fs::exists(f)) continue;
      auto chains = read_chains(f, TailPolicy::drop_truncated_tail);
      found.insert(found.end(), chains.begin(), chains.end());
    }
    for (auto& c : found) {
      const auto plan = std::find_if(plans.begin(), plans.end(), [&](const auto& x) { return x.plan_id == c.plan_id; });
      if (plan != plans.end() && is_complete(c, *plan)) previous.push_back(std::move(c));
    }
    log::info("resume: {} complete chain(s) from earlier runs", previous.size());
  } else {
    fs::remove(p.partial_chains());
  }

  std::ofstream checkpoint(p.partial_chains(), std::ios::app | std::ios::binary);
  RunOptions options;
  options.parallelism = g.parallelism;
  options.seed = g.seed;
  options.max_consecutive_failures = a.max_consecutive_failures;
  options.previous = previous;
  options.on_chain_done = [&](const ChainOutcome& o) {
    checkpoint << chain_to_jsonl(o.chain);
    checkpoint.flush();
  };
  const auto hits_before = cache->hits();
  auto result = run_corpus(corpus, plans, registry.resolver(), options);
  checkpoint.close();

  write_chains(result.chains, p.chains());
  fs::remove(p.partial_chains());
  const auto& m = result.manifest;
  auto section = detail::manifest_to_json(m);
  section["corpus"] = corpus_path;
  section["cache_hits"] = cache->hits() - hits_before;
  section["cache_entries"] = cache->size();
  save_stage(p, manifest, "run", std::move(section));
  out << fmt::format("run {}: {} completed, {} failed, {} skipped, {} reused; cache hits {}\n", m.status,
                     m.completed_chains, m.failed_chains, m.skipped_chains, m.reused_chains, cache->hits() - hits_before);
  for (const auto& f : m.failures) out << fmt::format("  failed {} / {}: {}\n", f.sentence_id, f.plan_id, f.error);
  return m.status == "complete" ? kExitOk : kExitPartial;
}

// ---- score ----------------------------------------------------------------

struct ScoreArgs {
  std::string mode = "source", rule = "end_of_iteration";
};

int cmd_score(const Globals& g, const ScoreArgs& a, std::ostream& out) {
  const Paths p{g.out};
  auto manifest = load_manifest(p);
  require_stage(manifest, "run", "score");
  const auto plans = read_plans(p.plans());
  const auto chains = read_chains(p.chains());
  const auto corpus = corpus_from_manifest(manifest);

  std::shared_ptr<Scorer> scorer;
  BackendRegistry registry;
  if (g.mock) {
    scorer = std::make_shared<MockScorer>();
  } else {
    registry = make_registry(g, plans, nullptr);
  }
  Scorer& s = scorer ? *scorer : registry.scorer();

  ScoreOptions options;
  options.mode = parse_scoring_mode(a.mode);
  options.rule = parse_comparison_rule(a.rule);
  options.parallelism = g.parallelism;
  options.corpus = &corpus;

  fs::remove_all(p.scores());
  fs::create_directories(p.scores());
  bool partial = false;
  Json matrices = Json::array();
  for (const auto& plan : plans) {
    std::vector<TranslationChain> group;
    std::size_t incomplete = 0;
    for (const auto& c : chains) {
      if (c.plan_id != plan.plan_id) continue;
      if (is_complete(c, plan)) {
        group.push_back(c);
      } else {
        ++incomplete;
      }
    }
    if (incomplete > 0) {
      partial = true;
      log::warn("plan {}: {} incomplete chain(s) left unscored", plan.plan_id, incomplete);
    }
    if (group.empty()) continue;
    const auto matrix = score_chains(group, plan, s, options);
    write_score_matrix(matrix, p.scores() / (plan.plan_id + ".jsonl"));
    matrices.push_back(matrix.matrix_id);
    out << fmt::format("{}: {} x {} scores\n", matrix.matrix_id, matrix.sentence_count(), matrix.iteration_count());
  }
  Json section;
  section["scorer"] = s.id();
  section["mode"] = std::string(to_string(options.mode));
  section["rule"] = std::string(to_string(options.rule));
  section["matrices"] = matrices;
  section["status"] = partial ? "partial" : "complete";
  save_stage(p, manifest, "score", std::move(section));
  return partial ? kExitPartial : kExitOk;
}

// ---- refine ---------------------------------------------------------------

int cmd_refine(const Globals& g, std::ostream& out) {
  const Paths p{g.out};
  auto manifest = load_manifest(p);
  require_stage(manifest, "score", "refine");
  fs::remove_all(p.refined());
  fs::create_directories(p.refined());
  Json refined = Json::array();
  for (const auto& f : jsonl_files(p.scores())) {
    const auto q = read_score_matrix(f);
    const auto r = refine_scores(q);
    write_refined_matrix(r, p.refined() / f.filename());
    refined.push_back(r.matrix_id);
    out << fmt::format("{}: mean of sentence means {:.6f}, spread {:.6f}\n", q.matrix_id, r.fragility.mean_of_means,
                       r.fragility.std_of_means);
  }
  if (refined.empty()) throw StageOrderError("no score matrices to refine");
  Json section;
  section["matrices"] = refined;
  save_stage(p, manifest, "refine", std::move(section));
  return kExitOk;
}

// ---- export ---------------------------------------------------------------

struct ExportArgs {
  std::string label_mode = "refined", reference = "pseudo";
  double train_fraction = 0.8;
};

int cmd_export(const Globals& g, const ExportArgs& a, std::ostream& out) {
  const Paths p{g.out};
  auto manifest = load_manifest(p);
  require_stage(manifest, "score", "export");
  ExportOptions options;
  options.label_mode = parse_label_mode(a.label_mode);
  options.reference_kind = parse_reference_kind(a.reference);
  if (options.label_mode == LabelMode::refined) require_stage(manifest, "refine", "export --label-mode refined");
  const auto corpus = corpus_from_manifest(manifest);
  options.corpus = &corpus;
  const auto chains = read_chains(p.chains());

  const auto [train, valid] = split_corpus(corpus, SplitSpec{a.train_fraction, g.seed});
  std::set<std::string> train_ids;
  for (const auto& r : train.records()) train_ids.insert(r.id);

  std::vector<TrainingExample> train_out, valid_out;
  for (const auto& q : load_matrices(p)) {
    std::optional<RefinedScoreMatrix> refined;
    if (options.label_mode == LabelMode::refined) {
      refined = read_refined_matrix(p.refined() / (q.plan_id + ".jsonl"));
    }
    const auto examples = export_training_examples(chains, q, refined ? &*refined : nullptr, options);
    for (const auto& e : examples) (train_ids.count(e.sentence_id) ? train_out : valid_out).push_back(e);
    out << fmt::format("{}: {} examples\n", q.matrix_id, examples.size());
  }
  fs::create_directories(p.exports());
  write_training_examples(train_out, p.exports() / "train.jsonl");
  write_training_examples(valid_out, p.exports() / "valid.jsonl");
  out << fmt::format("train {} / valid {} examples\n", train_out.size(), valid_out.size());
  Json section;
  section["label_mode"] = std::string(to_string(options.label_mode));
  section["reference_kind"] = std::string(to_string(options.reference_kind));
  section["train_fraction"] = a.train_fraction;
  section["train_examples"] = train_out.size();
  section["valid_examples"] = valid_out.size();
  save_stage(p, manifest, "export", std::move(section));
  return kExitOk;
}

// ---- eval -----------------------------------------------------------------

struct EvalArgs {
  std::string table, calibration_table;
  std::vector<std::string> systems;
  std::size_t resamples = 1000;
};

int cmd_eval(const Globals& g, const EvalArgs& a, std::ostream& out) {
  const auto full = SegmentScoreTable::load_tsv(a.table);
  const auto table = full.common_items_only(a.systems);
  if (table.size() < full.size()) {
    log::info("eval: kept {} of {} rows covered by every compared system", table.size(), full.size());
  }
  const auto m = table.metric_scores(), h = table.human_scores();
  TieCalibration acc;
  if (a.calibration_table.empty()) {
    acc = tie_calibrated_accuracy(table);
  } else {
    const auto calibration = SegmentScoreTable::load_tsv(a.calibration_table).common_items_only(a.systems);
    acc = tie_accuracy_at(table, tie_calibrated_accuracy(calibration).epsilon);
  }
  SpaOptions spa;
  spa.resamples = a.resamples;
  spa.seed = g.seed;
  out << "statistic\tvalue\n";
  out << fmt::format("pearson\t{:.6f}\n", pearson(m, h));
  out << fmt::format("spearman\t{:.6f}\n", spearman(m, h));
  out << fmt::format("kendall_tau_b\t{:.6f}\n", kendall_tau_b(m, h));
  out << fmt::format("acc_eq\t{:.6f}\n", acc.achieved_accuracy);
  out << fmt::format("acc_eq_epsilon\t{:.6g}\n", acc.epsilon);
  out << fmt::format("spa\t{:.6f}\n", soft_pairwise_accuracy(table, spa));
  return kExitOk;
}

// ---- auc / curves ---------------------------------------------------------

int cmd_auc(const Globals& g, std::ostream& out) {
  const Paths p{g.out};
  require_stage(load_manifest(p), "score", "auc");
  const auto plans = read_plans(p.plans());
  std::vector<RoundScores> inputs;
  for (const auto& q : load_matrices(p)) {
    const auto plan = std::find_if(plans.begin(), plans.end(), [&](const auto& x) { return x.plan_id == q.plan_id; });
    const std::string category = plan == plans.end() ? "unknown" : std::string(to_string(plan->kind));
    inputs.push_back({category, q.plan_id, q.scorer_id, q.values});
  }
  const auto rows = paired_generation_report(inputs);
  detail::write_file_atomic(p.root / "auc.tsv", render_auc_tsv(rows));
  out << render_auc_table(rows);
  return kExitOk;
}

int cmd_curves(const Globals& g, std::ostream& out) {
  const Paths p{g.out};
  require_stage(load_manifest(p), "score", "curves");
  std::string tsv = "plan_id\tlp\tscorer\trule\titeration\tlang\tmean\tstd\tn\n";
  for (const auto& q : load_matrices(p)) {
    const auto stats = compute_iteration_stats(q.values);
    for (std::size_t j = 0; j < q.iteration_count(); ++j) {
      tsv += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{:.6f}\t{:.6f}\t{}\n", q.plan_id, q.language_pair, q.scorer_id,
                         to_string(q.comparison_rule), j + 1, j < q.column_langs.size() ? q.column_langs[j] : "",
                         stats.means[j], stats.stddevs[j], q.sentence_count());
    }
  }
  detail::write_file_atomic(p.root / "curves.tsv", tsv);
  out << tsv;
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Translation degradation chains, pseudo-labels and metric meta-evaluation"};
  app.name("telephone");
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "Backend config JSON (translators and scorer)");
  app.add_option("--out", g.out, "Output directory for every stage")->capture_default_str();
  app.add_option("--seed", g.seed, "Seed for simulators, splits and permutation tests")->capture_default_str();
  app.add_option("--parallelism", g.parallelism, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_flag("--mock", g.mock, "Use offline simulator translators and the mock scorer");

  PlanArgs plan_args;
  auto* plan = app.add_subcommand("plan", "Build rotation plans (plans.json)");
  plan->add_option("--src", plan_args.src, "Source language");
  plan->add_option("--tgt", plan_args.tgt, "Target language")->capture_default_str();
  plan->add_option("--corpus", plan_args.corpus, "Build plans for every language pair in this corpus");
  plan->add_option("--kind", plan_args.kind, "model | language | language-direct")->capture_default_str();
  plan->add_option("--diversity", plan_args.diversity, "Triplet table for language rotation: low | high")
      ->capture_default_str();
  plan->add_option("--pivot", plan_args.pivot, "Pivot language for pivoted language rotation")->capture_default_str();
  plan->add_option("--plan-config", plan_args.plan_config, "Setup list JSON; overrides --kind");
  plan->add_option("--iterations", plan_args.iterations, "Iterations per setup (default 3)");
  plan->add_option("--design", plan_args.design, "standard (3 setups, 18 rounds) | free")
      ->check(CLI::IsMember({"standard", "free"}))
      ->capture_default_str();

  RunArgs run_args;
  auto* run_cmd = app.add_subcommand("run", "Execute every plan over the corpus (chains.jsonl)");
  run_cmd->add_option("--corpus", run_args.corpus, "Corpus TSV or JSONL");
  run_cmd->add_flag("--resume", run_args.resume, "Keep complete chains from earlier runs, redo the rest");
  run_cmd->add_option("--max-consecutive-failures", run_args.max_consecutive_failures,
                      "Abort after this many failed chains in a row")
      ->capture_default_str();

  auto* resume_cmd = app.add_subcommand("resume", "Same as 'run --resume'");
  resume_cmd->add_option("--corpus", run_args.corpus, "Corpus TSV or JSONL (default: the one from the last run)");
  resume_cmd->add_option("--max-consecutive-failures", run_args.max_consecutive_failures,
                         "Abort after this many failed chains in a row")
      ->capture_default_str();

  ScoreArgs score_args;
  auto* score = app.add_subcommand("score", "Score chain outputs (scores/<plan>.jsonl)");
  score->add_option("--mode", score_args.mode, "source | reference")->capture_default_str();
  score->add_option("--rule", score_args.rule, "end_of_iteration | forward_output | every_hop")
      ->capture_default_str();

  auto* refine = app.add_subcommand("refine", "Normalize raw scores into refined scores (refined/<plan>.jsonl)");

  ExportArgs export_args;
  auto* exp = app.add_subcommand("export", "Write training examples (export/train.jsonl, export/valid.jsonl)");
  exp->add_option("--label-mode", export_args.label_mode, "refined | iteration_average | raw")->capture_default_str();
  exp->add_option("--reference", export_args.reference, "gold | pseudo | none")->capture_default_str();
  exp->add_option("--train-fraction", export_args.train_fraction, "Share of sentences in the training split")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Correlations, acc_eq and SPA for a segment score table");
  eval->add_option("--table", eval_args.table, "TSV: item_id system_id metric_score human_score")->required();
  eval->add_option("--calibration-table", eval_args.calibration_table, "Calibrate the tie threshold on this table");
  eval->add_option("--systems", eval_args.systems, "Restrict to these systems and their common items")
      ->delimiter(',');
  eval->add_option("--resamples", eval_args.resamples, "Permutation resamples for SPA")->capture_default_str();

  auto* auc = app.add_subcommand("auc", "Paired-generation AUC per score matrix (auc.tsv)");
  auto* curves = app.add_subcommand("curves", "Per-iteration mean scores (curves.tsv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (plan->parsed()) return cmd_plan(g, plan_args, out);
    if (run_cmd->parsed()) return cmd_run(g, run_args, out);
    if (resume_cmd->parsed()) {
      run_args.resume = true;
      return cmd_run(g, run_args, out);
    }
    if (score->parsed()) return cmd_score(g, score_args, out);
    if (refine->parsed()) return cmd_refine(g, out);
    if (exp->parsed()) return cmd_export(g, export_args, out);
    if (eval->parsed()) return cmd_eval(g, eval_args, out);
    if (auc->parsed()) return cmd_auc(g, out);
    if (curves->parsed()) return cmd_curves(g, out);
  } catch (const StageOrderError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitPartial;
  }
  return kExitUsage;
}

}  // namespace telephone::cli
