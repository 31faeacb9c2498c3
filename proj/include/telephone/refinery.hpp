#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "telephone/chain.hpp"
#include "telephone/ingest.hpp"
#include "telephone/scores.hpp"

namespace telephone {

/// Global sentence difficulty. All standard deviations are population (1/N).
struct FragilityStats {
  std::vector<double> sentence_means;  // mean of each row over the K iterations
  double mean_of_means = 0.0;
  double std_of_means = 0.0;
  std::vector<double> z;  // (sentence_mean - mean_of_means) / std_of_means, or 0 when std is 0

  bool operator==(const FragilityStats&) const = default;
};

/// Per-iteration score distribution (column mean and population std).
struct IterationStats {
  std::vector<double> means;
  std::vector<double> stddevs;

  bool operator==(const IterationStats&) const = default;
};

/// Requires at least 2 rows and 1 column.
FragilityStats compute_fragility(const ScoreGrid& q);
FragilityStats compute_fragility(const RawScoreMatrix& q);

IterationStats compute_iteration_stats(const ScoreGrid& q);
IterationStats compute_iteration_stats(const RawScoreMatrix& q);

/// r(i, j) = column_mean(j) + z(i) * column_std(j), unclipped.
ScoreGrid refine_grid(const ScoreGrid& q);

struct RefinedScoreMatrix {
  std::string matrix_id;
  std::string source_matrix_id;
  std::string plan_id;
  std::string language_pair;
  std::vector<std::string> sentence_ids;
  ScoreGrid values;   // unclipped
  ScoreGrid clipped;  // values clamped to [0, 1]
  FragilityStats fragility;
  IterationStats iterations;

  bool operator==(const RefinedScoreMatrix&) const = default;
};

RefinedScoreMatrix refine_scores(const RawScoreMatrix& q);

void write_refined_matrix(const RefinedScoreMatrix& r, const std::filesystem::path& path);
RefinedScoreMatrix read_refined_matrix(const std::filesystem::path& path);

enum class LabelMode { refined, iteration_average, raw };
enum class ReferenceKind { gold, pseudo_previous_iteration, none };

std::string_view to_string(LabelMode m);
LabelMode parse_label_mode(std::string_view s);
std::string_view to_string(ReferenceKind k);
ReferenceKind parse_reference_kind(std::string_view s);

struct TrainingExample {
  std::string source;
  std::string hypothesis;
  std::optional<std::string> reference;
  double label = 0.0;
  LabelMode label_mode = LabelMode::refined;
  ReferenceKind reference_kind = ReferenceKind::none;
  std::string language_pair;
  std::string sentence_id;
  std::size_t iteration = 0;  // 1-based column

  bool operator==(const TrainingExample&) const = default;
};

struct ExportOptions {
  LabelMode label_mode = LabelMode::refined;
  ReferenceKind reference_kind = ReferenceKind::none;
  /// Gold references and per-sentence language pairs.
  const Corpus* corpus = nullptr;
};

/// One example per (sentence, scored iteration) of `q`. The hypothesis is the
/// scored chain text, the source is the original. Pseudo references are the
/// previous scored text (the original at iteration 1). `refined` is required
/// for LabelMode::refined.
std::vector<TrainingExample> export_training_examples(std::span<const TranslationChain> chains,
                                                      const RawScoreMatrix& q, const RefinedScoreMatrix* refined,
                                                      const ExportOptions& options);

/// JSONL {"src","mt","ref","score","lp","label_mode","reference_kind"}.
std::string training_example_to_jsonl(const TrainingExample& e);
void write_training_examples(std::span<const TrainingExample> examples, const std::filesystem::path& path);

}  // namespace telephone
