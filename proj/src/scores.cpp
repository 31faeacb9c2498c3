#include "telephone/scores.hpp"

#include <fmt/format.h>

#include <cmath>

#include "telephone/error.hpp"

namespace telephone {

ScoreGrid ScoreGrid::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  ScoreGrid g(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != g.cols()) {
      throw InvalidArgument(fmt::format("ragged grid: row {} has {} values, expected {}", i,
                                        rows[i].size(), g.cols()));
    }
    for (std::size_t j = 0; j < g.cols(); ++j) g(i, j) = rows[i][j];
  }
  return g;
}

std::vector<double> ScoreGrid::column(std::size_t j) const {
  std::vector<double> out(rows_);
  for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
  return out;
}

std::string_view to_string(ScoringMode m) {
  return m == ScoringMode::vs_original_source ? "vs_original_source" : "vs_gold_reference";
}

ScoringMode parse_scoring_mode(std::string_view s) {
  if (s == "vs_original_source" || s == "source") return ScoringMode::vs_original_source;
  if (s == "vs_gold_reference" || s == "reference") return ScoringMode::vs_gold_reference;
  throw InvalidArgument(fmt::format("unknown scoring mode '{}'", s));
}

std::string_view to_string(ComparisonRule r) {
  switch (r) {
    case ComparisonRule::end_of_iteration: return "end_of_iteration";
    case ComparisonRule::forward_output: return "forward_output";
    case ComparisonRule::every_hop: return "every_hop";
  }
  return "end_of_iteration";
}

ComparisonRule parse_comparison_rule(std::string_view s) {
  if (s == "end_of_iteration" || s == "back") return ComparisonRule::end_of_iteration;
  if (s == "forward_output" || s == "forward") return ComparisonRule::forward_output;
  if (s == "every_hop") return ComparisonRule::every_hop;
  throw InvalidArgument(fmt::format("unknown comparison rule '{}'", s));
}

void RawScoreMatrix::validate() const {
  if (sentence_ids.size() != values.rows()) {
    throw InvalidArgument(fmt::format("matrix {}: {} sentence ids for {} rows", matrix_id,
                                      sentence_ids.size(), values.rows()));
  }
  if (!positions.empty() && positions.size() != values.cols()) {
    throw InvalidArgument(fmt::format("matrix {}: {} positions for {} columns", matrix_id,
                                      positions.size(), values.cols()));
  }
  if (!column_langs.empty() && column_langs.size() != values.cols()) {
    throw InvalidArgument(fmt::format("matrix {}: {} column languages for {} columns", matrix_id,
                                      column_langs.size(), values.cols()));
  }
  for (std::size_t i = 0; i < values.rows(); ++i) {
    for (std::size_t j = 0; j < values.cols(); ++j) {
      const double v = values(i, j);
      if (!(v >= 0.0 && v <= 1.0)) {
        throw InvalidArgument(fmt::format("matrix {}: value {} at ({}, {}) outside [0, 1]",
                                          matrix_id, v, sentence_ids[i], j + 1));
      }
    }
  }
}

}  // namespace telephone
