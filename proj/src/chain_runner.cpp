#include "telephone/chain_runner.hpp"

#include <fmt/format.h>

#include <atomic>
#include <map>
#include <mutex>
#include <optional>
#include <set>

#include "parallel.hpp"
#include "telephone/error.hpp"
#include "telephone/log.hpp"

namespace telephone {

ChainOutcome run_chain(const SentenceRecord& sentence, const RotationPlan& plan,
                       const TranslatorResolver& translators) {
  if (plan.source_lang != sentence.source_lang) {
    throw InvalidArgument(fmt::format("plan {} starts in {}, sentence {} is in {}", plan.plan_id, plan.source_lang,
                                      sentence.id, sentence.source_lang));
  }
  ChainOutcome out;
  out.chain.sentence_id = sentence.id;
  out.chain.plan_id = plan.plan_id;
  out.chain.iterations.push_back({0, sentence.source_text, sentence.source_lang, "", Direction::origin});

  for (std::size_t k = 0; k < plan.hops.size(); ++k) {
    const Hop& hop = plan.hops[k];
    TranslationRequest request{out.chain.iterations.back().text, hop.from_lang, hop.to_lang,
                               HopKey{sentence.id, k}};
    try {
      Translator& translator = translators(hop.translator_id);
      auto text = translator.translate(request);
      if (text.empty()) throw BackendError(fmt::format("{} returned an empty translation", hop.translator_id));
      out.chain.iterations.push_back({k + 1, std::move(text), hop.to_lang, hop.translator_id, hop.direction});
    } catch (const SystemicBackendError& e) {
      out.error = fmt::format("hop {}: {}", k, e.what());
      out.systemic = true;
      return out;
    } catch (const BackendError& e) {
      out.error = fmt::format("hop {}: {}", k, e.what());
      return out;
    } catch (const InvalidArgument& e) {
      // Unknown translator id or unusable request: configuration, not data.
      out.error = fmt::format("hop {}: {}", k, e.what());
      out.systemic = true;
      return out;
    }
  }
  return out;
}

bool is_complete(const TranslationChain& chain, const RotationPlan& plan) {
  return chain.plan_id == plan.plan_id && chain.iterations.size() == plan.hops.size() + 1;
}

namespace {

struct Task {
  std::size_t sentence;
  std::size_t plan;
};

using ChainKey = std::pair<std::string, std::string>;  // (sentence_id, plan_id)

}  // namespace

RunResult run_corpus(const Corpus& corpus, std::span<const RotationPlan> plans, const TranslatorResolver& translators,
                     const RunOptions& options) {
  if (options.parallelism == 0) throw InvalidArgument("parallelism must be >= 1");

  std::map<ChainKey, const TranslationChain*> previous;
  for (const auto& c : options.previous) previous[{c.sentence_id, c.plan_id}] = &c;

  RunResult result;
  auto& manifest = result.manifest;
  manifest.seed = options.seed;
  manifest.started_at = utc_timestamp();
  std::set<std::string> backend_ids;
  for (const auto& p : plans) {
    manifest.plan_ids.push_back(p.plan_id);
    for (const auto& h : p.hops) backend_ids.insert(h.translator_id);
  }
  manifest.backend_ids.assign(backend_ids.begin(), backend_ids.end());

  // Slots in (corpus order, plan order); reused chains fill theirs directly.
  std::vector<std::optional<TranslationChain>> slots;
  std::vector<Task> tasks;
  std::vector<std::size_t> task_slot;
  std::set<std::string> uncovered_pairs;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    bool covered = false;
    for (std::size_t p = 0; p < plans.size(); ++p) {
      if (!plan_applies_to(plans[p], corpus[i])) continue;
      covered = true;
      auto prev = previous.find({corpus[i].id, plans[p].plan_id});
      if (prev != previous.end() && is_complete(*prev->second, plans[p])) {
        slots.emplace_back(*prev->second);
        ++manifest.reused_chains;
        ++manifest.completed_chains;
        continue;
      }
      task_slot.push_back(slots.size());
      slots.emplace_back();
      tasks.push_back({i, p});
    }
    if (!covered) uncovered_pairs.insert(corpus[i].language_pair());
  }
  for (const auto& lp : uncovered_pairs) log::warn("no plan covers language pair {}", lp);

  std::vector<std::optional<ChainOutcome>> outcomes(tasks.size());
  std::mutex done_mutex;
  std::size_t consecutive_failures = 0;
  std::atomic<bool> abort{false};
  std::string abort_reason;

  detail::parallel_for(tasks.size(), options.parallelism, [&](std::size_t t) {
    if (abort.load()) return;
    const auto& task = tasks[t];
    auto outcome = run_chain(corpus[task.sentence], plans[task.plan], translators);
    std::lock_guard lock(done_mutex);
    if (outcome.ok()) {
      consecutive_failures = 0;
    } else {
      ++consecutive_failures;
      log::warn("chain {}/{} failed: {}", outcome.chain.sentence_id, outcome.chain.plan_id, outcome.error);
      if (!abort && (outcome.systemic || consecutive_failures >= options.max_consecutive_failures)) {
        abort = true;
        abort_reason = outcome.systemic ? "systemic backend failure: " + outcome.error
                                        : fmt::format("{} consecutive chain failures", consecutive_failures);
        log::error("aborting run: {}", abort_reason);
      }
    }
    if (options.on_chain_done) options.on_chain_done(outcome);
    outcomes[t] = std::move(outcome);
  });

  for (std::size_t t = 0; t < tasks.size(); ++t) {
    auto& o = outcomes[t];
    if (!o) {
      ++manifest.skipped_chains;
      continue;
    }
    if (o->ok()) {
      ++manifest.completed_chains;
    } else {
      ++manifest.failed_chains;
      manifest.failures.push_back({o->chain.sentence_id, o->chain.plan_id, o->error});
    }
    slots[task_slot[t]] = std::move(o->chain);
  }
  for (auto& s : slots) {
    if (s) result.chains.push_back(std::move(*s));
  }

  if (abort) {
    manifest.status = "aborted";
  } else if (manifest.failed_chains > 0) {
    manifest.status = "partial";
  }
  manifest.finished_at = utc_timestamp();
  return result;
}

RawScoreMatrix score_chains(std::span<const TranslationChain> chains, const RotationPlan& plan, Scorer& scorer,
                            const ScoreOptions& options) {
  const auto positions = comparison_positions(plan, options.rule);
  if (positions.empty()) throw InvalidArgument(fmt::format("plan {} has no comparison points", plan.plan_id));

  RawScoreMatrix m;
  m.plan_id = plan.plan_id;
  m.language_pair = plan.target_lang.empty() ? plan.source_lang : plan.source_lang + "-" + plan.target_lang;
  m.scorer_id = scorer.id();
  m.scoring_mode = options.mode;
  m.comparison_rule = options.rule;
  m.positions = positions;
  for (auto pos : positions) m.column_langs.push_back(language_at(plan, pos));
  m.matrix_id = fmt::format("{}|{}|{}|{}|{}", m.plan_id, m.language_pair, m.scorer_id, to_string(m.scoring_mode),
                            to_string(m.comparison_rule));

  std::set<std::string> seen;
  std::vector<std::optional<std::string>> references(chains.size());
  for (std::size_t i = 0; i < chains.size(); ++i) {
    const auto& c = chains[i];
    if (c.plan_id != plan.plan_id) {
      throw InvalidArgument(fmt::format("chain {}/{} does not follow plan {}", c.sentence_id, c.plan_id, plan.plan_id));
    }
    if (!seen.insert(c.sentence_id).second) {
      throw InvalidArgument(fmt::format("sentence {} appears twice for plan {}", c.sentence_id, plan.plan_id));
    }
    for (std::size_t j = 0; j < positions.size(); ++j) {
      if (positions[j] >= c.iterations.size()) {
        throw InvalidArgument(fmt::format("missing comparison point: sentence {}, iteration {}", c.sentence_id, j + 1));
      }
    }
    if (options.mode == ScoringMode::vs_gold_reference) {
      const SentenceRecord* rec = options.corpus ? options.corpus->find(c.sentence_id) : nullptr;
      if (!rec || !rec->reference_text) {
        throw InvalidArgument(fmt::format("sentence {} has no gold reference", c.sentence_id));
      }
      references[i] = rec->reference_text;
    }
    m.sentence_ids.push_back(c.sentence_id);
  }

  const std::size_t k = positions.size();
  m.values = ScoreGrid(chains.size(), k);
  detail::parallel_for(chains.size() * k, options.parallelism, [&](std::size_t cell) {
    const std::size_t i = cell / k, j = cell % k;
    const auto& c = chains[i];
    ScoreRequest req{c.iterations.front().text, c.iterations[positions[j]].text, references[i]};
    m.values(i, j) = scorer.score(req).value();
  });
  return m;
}

}  // namespace telephone
