#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "telephone/backends.hpp"
#include "telephone/chain.hpp"
#include "telephone/ingest.hpp"
#include "telephone/registry.hpp"
#include "telephone/rotation.hpp"
#include "telephone/scores.hpp"

namespace telephone {

/// Result of executing one plan over one sentence. On failure `chain` holds the
/// outputs produced before the failing hop.
struct ChainOutcome {
  TranslationChain chain;
  std::string error;
  bool systemic = false;

  bool ok() const noexcept { return error.empty(); }
};

/// Executes the hops strictly in order, each consuming the previous output.
/// Throws InvalidArgument if the plan does not start in the sentence's source
/// language; backend failures are reported through the outcome.
ChainOutcome run_chain(const SentenceRecord& sentence, const RotationPlan& plan,
                       const TranslatorResolver& translators);

/// True when the chain holds the original plus one output per plan hop.
bool is_complete(const TranslationChain& chain, const RotationPlan& plan);

struct RunOptions {
  std::size_t parallelism = 1;
  std::uint64_t seed = 0;  // recorded in the manifest
  /// Consecutive failed chains after which the run stops scheduling work.
  std::size_t max_consecutive_failures = 32;
  /// Chains from an earlier run; complete ones are kept verbatim, the rest re-run.
  std::span<const TranslationChain> previous;
  /// Called (serialized) as each chain finishes, for checkpointing.
  std::function<void(const ChainOutcome&)> on_chain_done;
};

struct RunResult {
  /// Every attempted or reused chain, ordered by (corpus order, plan order).
  std::vector<TranslationChain> chains;
  RunManifest manifest;
};

/// Runs every applicable plan over every sentence. The result is independent
/// of `parallelism` for deterministic backends.
RunResult run_corpus(const Corpus& corpus, std::span<const RotationPlan> plans,
                     const TranslatorResolver& translators, const RunOptions& options = {});

struct ScoreOptions {
  ScoringMode mode = ScoringMode::vs_original_source;
  ComparisonRule rule = ComparisonRule::end_of_iteration;
  std::size_t parallelism = 1;
  /// Needed for gold references (vs_gold_reference) and the language-pair tag.
  const Corpus* corpus = nullptr;
};

/// Scores every comparison point of every chain. All chains must follow `plan`
/// and be complete; rows follow the order of `chains`.
RawScoreMatrix score_chains(std::span<const TranslationChain> chains, const RotationPlan& plan, Scorer& scorer,
                            const ScoreOptions& options);

}  // namespace telephone
