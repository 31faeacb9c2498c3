#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "telephone/scores.hpp"

namespace telephone {

/// Product-moment correlation. Throws InvalidArgument on length mismatch,
/// fewer than 2 points, or a constant vector.
double pearson(std::span<const double> x, std::span<const double> y);

/// 1-based ranks; tied values share the average of their ranks.
std::vector<double> average_ranks(std::span<const double> x);

/// Pearson over average ranks. Throws InvalidArgument if either side is all ties.
double spearman(std::span<const double> x, std::span<const double> y);

/// Tie-corrected Kendall tau (tau-b), O(n log n).
double kendall_tau_b(std::span<const double> x, std::span<const double> y);

/// P(earlier > later) + P(tie) / 2 over all cross-class pairs, counted exactly.
/// Throws InvalidArgument if either class is empty.
double roc_auc(std::span<const double> earlier, std::span<const double> later);

struct GenerationPair {
  double earlier_score = 0.0;
  double later_score = 0.0;
  int earlier_round = 0;
  int later_round = 0;
};

/// Outputs of two rounds scored by one metric; earlier_round < later_round.
struct PairedGenerationSet {
  std::vector<GenerationPair> pairs;

  void validate() const;
};

/// AUC with the earlier-round scores as the positive class.
double roc_auc(const PairedGenerationSet& set);

struct SegmentScore {
  std::string item_id;
  std::string system_id;
  double metric_score = 0.0;
  double human_score = 0.0;
};

/// Per-system, per-item metric and human scores.
class SegmentScoreTable {
 public:
  SegmentScoreTable() = default;
  /// Throws InvalidArgument if an (item, system) pair repeats.
  explicit SegmentScoreTable(std::vector<SegmentScore> rows);

  /// TSV with header `item_id system_id metric_score human_score`.
  static SegmentScoreTable load_tsv(const std::filesystem::path& path);

  const std::vector<SegmentScore>& rows() const noexcept { return rows_; }
  std::vector<std::string> systems() const;  // sorted
  std::vector<std::string> items() const;    // sorted
  std::size_t size() const noexcept { return rows_.size(); }

  /// Keeps the given systems (all if empty) and only the items all of them cover.
  SegmentScoreTable common_items_only(std::span<const std::string> systems = {}) const;

  /// True when every system covers the same item set.
  bool has_shared_coverage() const;

  std::vector<double> metric_scores() const;
  std::vector<double> human_scores() const;

 private:
  std::vector<SegmentScore> rows_;
};

struct TieCalibration {
  double epsilon = 0.0;
  double achieved_accuracy = 0.0;
  std::size_t pair_count = 0;
};

/// Within-item pairwise accuracy at a fixed metric tie threshold.
/// Throws InvalidArgument without shared coverage or comparable pairs.
TieCalibration tie_accuracy_at(const SegmentScoreTable& table, double epsilon);

/// Picks epsilon from {0} and the distinct |metric differences| to maximise
/// accuracy; the smallest epsilon wins ties.
TieCalibration tie_calibrated_accuracy(const SegmentScoreTable& table);

struct SpaOptions {
  std::size_t resamples = 1000;
  std::uint64_t seed = 0;
  /// Items at or below this count are enumerated exactly.
  std::size_t exact_threshold = 12;
  bool force_monte_carlo = false;
};

/// One-sided sign-flip p-value for "sum of differences is this large by chance".
/// `signs_seed` fixes the resampled patterns.
double sign_flip_p_value(std::span<const double> differences, const SpaOptions& options,
                         std::uint64_t signs_seed);

struct SystemPairAgreement {
  std::string system_a;
  std::string system_b;
  double p_metric = 0.0;
  double p_human = 0.0;
};

struct SpaResult {
  double spa = 0.0;
  std::vector<SystemPairAgreement> pairs;
  bool exact = false;
};

/// Soft pairwise accuracy over every unordered system pair.
SpaResult soft_pairwise_accuracy_detail(const SegmentScoreTable& table, const SpaOptions& options = {});
double soft_pairwise_accuracy(const SegmentScoreTable& table, const SpaOptions& options = {});

/// Scores of one metric on the outputs of one setup; columns are rounds 1..K.
struct RoundScores {
  std::string category;
  std::string system;
  std::string metric;
  ScoreGrid scores;
};

struct AucRow {
  std::string category;
  std::string system;
  std::string metric;
  double auc_1v2 = 0.0;
  double auc_2v3 = 0.0;
  double auc_1v3 = 0.0;
};

/// Builds the earlier/later set for rounds a < b (1-based) of a score grid.
PairedGenerationSet paired_generation_set(const ScoreGrid& scores, int earlier_round, int later_round);

/// AUC for round pairs 1v2, 2v3 and 1v3. Throws InvalidArgument if a grid has
/// fewer than 3 rounds.
std::vector<AucRow> paired_generation_report(std::span<const RoundScores> inputs);

std::string render_auc_tsv(std::span<const AucRow> rows);
/// Rows are (category, system); columns are round pairs, each split by metric.
std::string render_auc_table(std::span<const AucRow> rows);

}  // namespace telephone
