#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace telephone {

/// Dense row-major N x K grid of reals. Rows are sentences, columns iterations.
class ScoreGrid {
 public:
  ScoreGrid() = default;
  ScoreGrid(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  /// Throws InvalidArgument on ragged input.
  static ScoreGrid from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::vector<double> column(std::size_t j) const;
  std::span<const double> data() const noexcept { return data_; }

  bool operator==(const ScoreGrid&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

enum class ScoringMode { vs_original_source, vs_gold_reference };

/// Which chain outputs become the K scored columns.
enum class ComparisonRule {
  end_of_iteration,  // text after the last hop of each iteration (comparison language)
  forward_output,    // output of the first forward hop of each iteration
  every_hop,         // every hop output
};

std::string_view to_string(ScoringMode m);
ScoringMode parse_scoring_mode(std::string_view s);
std::string_view to_string(ComparisonRule r);
ComparisonRule parse_comparison_rule(std::string_view s);

/// Raw metric scores q for one normalization group (one plan, one language pair).
struct RawScoreMatrix {
  std::string matrix_id;
  std::string plan_id;
  std::string language_pair;
  std::vector<std::string> sentence_ids;
  ScoreGrid values;
  std::string scorer_id;
  ScoringMode scoring_mode = ScoringMode::vs_original_source;
  ComparisonRule comparison_rule = ComparisonRule::end_of_iteration;
  std::vector<std::size_t> positions;      // chain output index behind each column
  std::vector<std::string> column_langs;   // language of the scored text per column

  std::size_t sentence_count() const noexcept { return values.rows(); }
  std::size_t iteration_count() const noexcept { return values.cols(); }

  /// Throws InvalidArgument if shapes disagree or any value lies outside [0, 1].
  void validate() const;

  bool operator==(const RawScoreMatrix&) const = default;
};

}  // namespace telephone
