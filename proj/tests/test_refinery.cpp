#include <gtest/gtest.h>

#include <cmath>

#include "support/oracles.hpp"
#include "support/synthetic.hpp"
#include "telephone/error.hpp"
#include "telephone/hash.hpp"
#include "telephone/refinery.hpp"

namespace telephone {
namespace {

const ScoreGrid kHand = ScoreGrid::from_rows({{0.9, 0.4}, {0.5, 0.5}, {0.4, 0.3}});

RawScoreMatrix matrix_of(const ScoreGrid& g) {
  RawScoreMatrix q;
  q.matrix_id = "m";
  q.plan_id = "p";
  q.language_pair = "cs-en";
  for (std::size_t i = 0; i < g.rows(); ++i) q.sentence_ids.push_back("s" + std::to_string(i));
  q.values = g;
  q.scorer_id = "mock";
  for (std::size_t j = 0; j < g.cols(); ++j) {
    q.positions.push_back(2 * (j + 1));
    q.column_langs.push_back("cs");
  }
  return q;
}

// Chain k has outputs "s<i>-t<pos>" at every position, so references are easy to predict.
std::vector<TranslationChain> chains_for(const RawScoreMatrix& q) {
  std::vector<TranslationChain> out;
  for (const auto& id : q.sentence_ids) {
    TranslationChain c{id, q.plan_id, {}};
    for (std::size_t pos = 0; pos <= q.positions.back(); ++pos) {
      c.iterations.push_back({pos, id + "-t" + std::to_string(pos), pos % 2 ? "en" : "cs", pos ? "m" : "",
                              pos == 0 ? Direction::origin : (pos % 2 ? Direction::forward : Direction::back)});
    }
    out.push_back(std::move(c));
  }
  return out;
}

TEST(Fragility, HandFixture) {
  const auto f = compute_fragility(kHand);
  ASSERT_EQ(f.z.size(), 3u);
  EXPECT_NEAR(f.sentence_means[0], 0.65, 1e-12);
  EXPECT_NEAR(f.sentence_means[1], 0.50, 1e-12);
  EXPECT_NEAR(f.sentence_means[2], 0.35, 1e-12);
  EXPECT_NEAR(f.mean_of_means, 0.5, 1e-12);
  EXPECT_NEAR(f.std_of_means, std::sqrt(0.015), 1e-12);
  EXPECT_NEAR(f.z[0], 1.224745, 1e-6);
  EXPECT_NEAR(f.z[1], 0.0, 1e-12);
  EXPECT_NEAR(f.z[2], -1.224745, 1e-6);
}

TEST(Fragility, IdenticalRowsGiveZeroZ) {
  const auto f = compute_fragility(ScoreGrid::from_rows({{0.3, 0.7}, {0.3, 0.7}, {0.3, 0.7}}));
  EXPECT_EQ(f.std_of_means, 0.0);
  for (double z : f.z) EXPECT_EQ(z, 0.0);
}

TEST(Fragility, TwoPointsStandardizeToPlusMinusOne) {
  const auto f = compute_fragility(ScoreGrid::from_rows({{0.8, 0.8}, {0.2, 0.2}}));
  EXPECT_NEAR(f.z[0], 1.0, 1e-12);
  EXPECT_NEAR(f.z[1], -1.0, 1e-12);
}

TEST(Fragility, SingleSentenceRejected) {
  EXPECT_THROW(compute_fragility(ScoreGrid::from_rows({{0.5, 0.4}})), InvalidArgument);
}

TEST(IterationStats, HandFixture) {
  const auto s = compute_iteration_stats(kHand);
  EXPECT_NEAR(s.means[0], 0.6, 1e-12);
  EXPECT_NEAR(s.means[1], 0.4, 1e-12);
  EXPECT_NEAR(s.stddevs[0], std::sqrt(0.14 / 3), 1e-12);
  EXPECT_NEAR(s.stddevs[1], std::sqrt(0.02 / 3), 1e-12);
}

TEST(IterationStats, ConstantColumnHasZeroSpread) {
  const auto s = compute_iteration_stats(ScoreGrid::from_rows({{0.1, 0.7}, {0.9, 0.7}, {0.4, 0.7}}));
  EXPECT_EQ(s.stddevs[1], 0.0);
}

TEST(Refine, HandFixture) {
  const auto r = refine_scores(matrix_of(kHand));
  EXPECT_NEAR(r.values(0, 1), 0.5, 1e-9);
  EXPECT_NEAR(r.values(1, 1), 0.4, 1e-9);
  EXPECT_NEAR(r.values(2, 1), 0.3, 1e-9);
  EXPECT_NEAR(r.values(0, 0), 0.864575, 1e-6);
  EXPECT_NEAR(r.values(1, 0), 0.6, 1e-9);
  EXPECT_NEAR(r.values(2, 0), 0.335425, 1e-6);
  EXPECT_EQ(r.source_matrix_id, "m");
}

TEST(Refine, DegenerateFragilityCollapsesToColumnMeans) {
  const auto g = ScoreGrid::from_rows({{0.2, 0.6}, {0.6, 0.2}});
  const auto r = refine_grid(g);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_NEAR(r(i, 0), 0.4, 1e-12);
    EXPECT_NEAR(r(i, 1), 0.4, 1e-12);
  }
}

TEST(Refine, MatchesOracleAndKeepsColumnMeans) {
  SplitMix64 rng(11);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + rng.below(9), k = 1 + rng.below(6);
    oracle::Grid rows(n, std::vector<double>(k));
    for (auto& row : rows) {
      for (auto& v : row) v = rng.uniform();
    }
    const auto r = refine_grid(ScoreGrid::from_rows(rows));
    const auto o = oracle::refine(rows);
    for (std::size_t j = 0; j < k; ++j) {
      double mean = 0;
      for (std::size_t i = 0; i < n; ++i) {
        EXPECT_NEAR(r(i, j), o.r[i][j], 1e-12);
        mean += r(i, j);
      }
      EXPECT_NEAR(mean / n, static_cast<double>(o.col_mean[j]), 1e-9);
    }
  }
}

TEST(Refine, ScaleEquivariantBeforeClipping) {
  const double a = 0.5, b = 0.2;
  ScoreGrid scaled = kHand;
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 2; ++j) scaled(i, j) = a * kHand(i, j) + b;
  }
  const auto r = refine_grid(kHand), rs = refine_grid(scaled);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(rs(i, j), a * r(i, j) + b, 1e-12);
  }
}

TEST(Refine, WithinIterationOrderFollowsFragility) {
  const auto g = ScoreGrid::from_rows({{0.9, 0.1}, {0.2, 0.6}, {0.5, 0.5}, {0.3, 0.3}});
  const auto f = compute_fragility(g);
  const auto r = refine_grid(g);
  for (std::size_t j = 0; j < 2; ++j) {
    for (std::size_t a = 0; a < 4; ++a) {
      for (std::size_t b = 0; b < 4; ++b) {
        if (f.z[a] < f.z[b]) {
          EXPECT_LE(r(a, j), r(b, j));
        }
      }
    }
  }
}

TEST(Refine, ClipsOnlyTheExportCopy) {
  const auto g = ScoreGrid::from_rows({{1.0, 0.0}, {1.0, 1.0}, {0.0, 0.0}});
  const auto r = refine_scores(matrix_of(g));
  bool outside = false;
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      outside |= r.values(i, j) > 1.0 || r.values(i, j) < 0.0;
      EXPECT_GE(r.clipped(i, j), 0.0);
      EXPECT_LE(r.clipped(i, j), 1.0);
      EXPECT_EQ(r.clipped(i, j), std::clamp(r.values(i, j), 0.0, 1.0));
    }
  }
  EXPECT_TRUE(outside);
}

TEST(RefinedMatrixFile, RoundTrips) {
  testing::ScratchDir dir("refined");
  const auto r = refine_scores(matrix_of(kHand));
  write_refined_matrix(r, dir / "r.jsonl");
  const auto back = read_refined_matrix(dir / "r.jsonl");
  EXPECT_EQ(back.matrix_id, r.matrix_id);
  EXPECT_EQ(back.source_matrix_id, "m");
  EXPECT_EQ(back.sentence_ids, r.sentence_ids);
  EXPECT_EQ(back.values, r.values);
  EXPECT_EQ(back.clipped, r.clipped);
  EXPECT_EQ(back.fragility.z, r.fragility.z);
  EXPECT_EQ(back.iterations.means, r.iterations.means);
}

TEST(Export, RefinedLabelsAreTheClippedGrid) {
  const auto q = matrix_of(kHand);
  const auto r = refine_scores(q);
  const auto chains = chains_for(q);
  ExportOptions o;
  const auto ex = export_training_examples(chains, q, &r, o);
  ASSERT_EQ(ex.size(), 6u);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      const auto& e = ex[i * 2 + j];
      EXPECT_EQ(e.label, r.clipped(i, j));
      EXPECT_EQ(e.hypothesis, q.sentence_ids[i] + "-t" + std::to_string(q.positions[j]));
      EXPECT_EQ(e.source, q.sentence_ids[i] + "-t0");
    }
  }
}

TEST(Export, IterationAverageUsesColumnMeans) {
  const auto q = matrix_of(kHand);
  ExportOptions o;
  o.label_mode = LabelMode::iteration_average;
  const auto ex = export_training_examples(chains_for(q), q, nullptr, o);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(ex[i * 2].label, 0.6, 1e-12);
    EXPECT_NEAR(ex[i * 2 + 1].label, 0.4, 1e-12);
  }
}

TEST(Export, RawWithoutReferenceIsQualityEstimation) {
  const auto q = matrix_of(kHand);
  ExportOptions o;
  o.label_mode = LabelMode::raw;
  o.reference_kind = ReferenceKind::none;
  const auto ex = export_training_examples(chains_for(q), q, nullptr, o);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      EXPECT_EQ(ex[i * 2 + j].label, kHand(i, j));
      EXPECT_FALSE(ex[i * 2 + j].reference.has_value());
    }
  }
  const auto line = training_example_to_jsonl(ex[0]);
  EXPECT_NE(line.find("\"ref\":null"), std::string::npos);
  EXPECT_EQ(line.find("\"src\""), 1u);
}

TEST(Export, PseudoReferenceIsThePreviousScoredText) {
  const auto q = matrix_of(kHand);
  ExportOptions o;
  o.label_mode = LabelMode::raw;
  o.reference_kind = ReferenceKind::pseudo_previous_iteration;
  const auto ex = export_training_examples(chains_for(q), q, nullptr, o);
  EXPECT_EQ(ex[0].reference, "s0-t0");
  EXPECT_EQ(ex[1].reference, "s0-t2");
}

TEST(Export, GoldNeedsReferences) {
  const auto q = matrix_of(kHand);
  ExportOptions o;
  o.label_mode = LabelMode::raw;
  o.reference_kind = ReferenceKind::gold;
  EXPECT_THROW(export_training_examples(chains_for(q), q, nullptr, o), InvalidArgument);

  const Corpus corpus("c", {{"s0", "x", "cs", "en", "gold0", ""}, {"s1", "y", "cs", "en", std::nullopt, ""},
                            {"s2", "z", "cs", "en", "gold2", ""}});
  o.corpus = &corpus;
  EXPECT_THROW(export_training_examples(chains_for(q), q, nullptr, o), InvalidArgument);
}

TEST(Export, RefinedModeNeedsMatchingRefinedMatrix) {
  const auto q = matrix_of(kHand);
  ExportOptions o;
  EXPECT_THROW(export_training_examples(chains_for(q), q, nullptr, o), InvalidArgument);
  auto other = q;
  other.matrix_id = "other";
  const auto r = refine_scores(other);
  EXPECT_THROW(export_training_examples(chains_for(q), q, &r, o), InvalidArgument);
}

TEST(LabelModes, ParseNamesAndAliases) {
  EXPECT_EQ(parse_label_mode("refined"), LabelMode::refined);
  EXPECT_EQ(parse_label_mode("iteration_average"), LabelMode::iteration_average);
  EXPECT_EQ(parse_label_mode("raw"), LabelMode::raw);
  EXPECT_EQ(parse_reference_kind("pseudo"), ReferenceKind::pseudo_previous_iteration);
  EXPECT_THROW(parse_label_mode("smooth"), InvalidArgument);
}

}  // namespace
}  // namespace telephone
