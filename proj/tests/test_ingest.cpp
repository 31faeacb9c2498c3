#include <gtest/gtest.h>

#include <fstream>
#include <set>

#include "support/synthetic.hpp"
#include "telephone/error.hpp"
#include "telephone/ingest.hpp"

namespace telephone {
namespace {

void write(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

TranslationChain sample_chain(const std::string& id, const std::string& text) {
  return {id,
          "mr-cs-en-s1",
          {{0, text, "cs", "", Direction::origin},
           {1, "Earthquake around Putin?", "en", "gemma", Direction::forward},
           {2, text + "!", "cs", "gemma", Direction::back}}};
}

TEST(LoadCorpus, TsvKeepsFileOrder) {
  testing::ScratchDir dir("ingest");
  write(dir / "c.tsv",
        "id\tsource_text\tsource_lang\ttarget_lang\treference_text\n"
        "b\tZemětřesení kolem Putina?\tcs\ten\tEarthquake around Putin?\n"
        "a\tDobrý den\tcs\ten\t\n");
  const auto c = load_corpus(dir / "c.tsv");
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0].id, "b");
  EXPECT_EQ(c[0].source_text, "Zemětřesení kolem Putina?");
  EXPECT_EQ(c[0].reference_text, "Earthquake around Putin?");
  EXPECT_EQ(c[1].id, "a");
  EXPECT_FALSE(c[1].reference_text.has_value());
  EXPECT_EQ(c.find("a"), &c[1]);
}

TEST(LoadCorpus, MissingSourceNamesTheLine) {
  testing::ScratchDir dir("ingest");
  write(dir / "c.tsv", "id\tsource_text\tsource_lang\ttarget_lang\nx\tok\tcs\ten\ny\t\tcs\ten\n");
  const auto msg = error_of([&] { load_corpus(dir / "c.tsv"); });
  EXPECT_NE(msg.find(":3:"), std::string::npos) << msg;
  EXPECT_NE(msg.find("source_text"), std::string::npos) << msg;
}

TEST(LoadCorpus, DuplicateIdNamed) {
  testing::ScratchDir dir("ingest");
  write(dir / "c.tsv", "id\tsource_text\tsource_lang\ttarget_lang\nx\tone\tcs\ten\nx\ttwo\tcs\ten\n");
  EXPECT_NE(error_of([&] { load_corpus(dir / "c.tsv"); }).find("'x'"), std::string::npos);
}

TEST(LoadCorpus, EmptyFileRejected) {
  testing::ScratchDir dir("ingest");
  write(dir / "c.tsv", "");
  write(dir / "c.jsonl", "");
  EXPECT_THROW(load_corpus(dir / "c.tsv"), FormatError);
  EXPECT_THROW(load_corpus(dir / "c.jsonl"), FormatError);
}

TEST(LoadCorpus, JsonlAcceptsShortFieldsAndRowIds) {
  testing::ScratchDir dir("ingest");
  write(dir / "c.jsonl",
        "{\"src\":\"Ahoj\",\"ref\":\"Hi\",\"lp\":\"cs-en\"}\n"
        "{\"id\":\"k\",\"source_text\":\"Nazdar\",\"source_lang\":\"cs\",\"target_lang\":\"de\"}\n");
  const auto c = load_corpus(dir / "c.jsonl");
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0].id, "0");
  EXPECT_EQ(c[0].language_pair(), "cs-en");
  EXPECT_EQ(c[0].reference_text, "Hi");
  EXPECT_EQ(c[1].target_lang, "de");
}

TEST(LoadCorpus, JsonlMalformedLineNamed) {
  testing::ScratchDir dir("ingest");
  write(dir / "c.jsonl", "{\"src\":\"Ahoj\",\"lp\":\"cs-en\"}\n{oops\n");
  EXPECT_NE(error_of([&] { load_corpus(dir / "c.jsonl"); }).find(":2:"), std::string::npos);
}

TEST(Corpus, RejectsSameLanguagePair) {
  EXPECT_THROW(Corpus("c", {{"a", "x", "cs", "cs", std::nullopt, ""}}), InvalidArgument);
}

TEST(Split, TenRecordsSeedSeven) {
  const auto c = testing::synthetic_corpus(10, 1);
  const auto [train, valid] = split_corpus(c, {0.8, 7});
  EXPECT_EQ(train.size(), 8u);
  EXPECT_EQ(valid.size(), 2u);
  const auto [train2, valid2] = split_corpus(c, {0.8, 7});
  EXPECT_EQ(train.records(), train2.records());
  EXPECT_EQ(valid.records(), valid2.records());
}

TEST(Split, RoundHalfUp) {
  EXPECT_EQ(train_size(114864, 0.8), 91891u);
  EXPECT_EQ(train_size(5, 0.5), 3u);
  const auto [train, valid] = split_corpus(testing::synthetic_corpus(5, 2), {0.5, 0});
  EXPECT_EQ(train.size(), 3u);
  EXPECT_EQ(valid.size(), 2u);
}

TEST(Split, IsAPartitionForManySeeds) {
  const auto c = testing::synthetic_corpus(37, 3);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto [train, valid] = split_corpus(c, {0.8, seed});
    std::multiset<std::string> ids;
    for (const auto& r : train.records()) ids.insert(r.id);
    for (const auto& r : valid.records()) ids.insert(r.id);
    ASSERT_EQ(ids.size(), c.size());
    for (const auto& r : c.records()) EXPECT_EQ(ids.count(r.id), 1u);
  }
}

TEST(Split, RejectsTinyCorporaAndBadFractions) {
  EXPECT_THROW(split_corpus(testing::synthetic_corpus(1, 0), {0.8, 0}), InvalidArgument);
  EXPECT_THROW(split_corpus(testing::synthetic_corpus(4, 0), {1.0, 0}), InvalidArgument);
  EXPECT_THROW(split_corpus(testing::synthetic_corpus(4, 0), {0.0, 0}), InvalidArgument);
}

TEST(Chains, RoundTripIncludingNonAscii) {
  testing::ScratchDir dir("chains");
  const std::vector<TranslationChain> chains = {sample_chain("a", "Zemětřesení kolem Putina?"),
                                                sample_chain("b", "Dobrý den"), sample_chain("c", "Ahoj")};
  write_chains(chains, dir / "c.jsonl");
  EXPECT_EQ(read_chains(dir / "c.jsonl"), chains);
  EXPECT_NE(testing::slurp(dir / "c.jsonl").find("Zemětřesení kolem Putina?"), std::string::npos);
}

TEST(Chains, EmptyListRoundTrips) {
  testing::ScratchDir dir("chains");
  write_chains({}, dir / "c.jsonl");
  EXPECT_TRUE(read_chains(dir / "c.jsonl").empty());
}

TEST(Chains, FieldOrderIsFixed) {
  const auto line = chain_to_jsonl(sample_chain("a", "x"));
  EXPECT_EQ(line.rfind("{\"sentence_id\":\"a\",\"plan_id\":", 0), 0u) << line;
  EXPECT_NE(line.find("{\"index\":0,\"text\":\"x\",\"lang\":\"cs\",\"translator_id\":\"\",\"direction\":\"origin\"}"),
            std::string::npos)
      << line;
}

TEST(Chains, CorruptRecordIndexReported) {
  testing::ScratchDir dir("chains");
  write(dir / "c.jsonl", chain_to_jsonl(sample_chain("a", "x")) + "{\"sentence_id\":1}\n");
  EXPECT_NE(error_of([&] { read_chains(dir / "c.jsonl"); }).find("record 1"), std::string::npos);
}

TEST(Chains, TruncatedTailDroppedOnlyWhenAsked) {
  testing::ScratchDir dir("chains");
  const auto good = chain_to_jsonl(sample_chain("a", "x"));
  write(dir / "c.jsonl", good + good.substr(0, good.size() / 2));
  EXPECT_THROW(read_chains(dir / "c.jsonl"), FormatError);
  EXPECT_EQ(read_chains(dir / "c.jsonl", TailPolicy::drop_truncated_tail).size(), 1u);
}

TEST(ScoreMatrixFile, RoundTrips) {
  testing::ScratchDir dir("matrix");
  RawScoreMatrix q;
  q.matrix_id = "m";
  q.plan_id = "p";
  q.language_pair = "cs-en";
  q.sentence_ids = {"a", "b"};
  q.values = ScoreGrid::from_rows({{0.1, 0.123456789012345}, {1.0, 0.0}});
  q.scorer_id = "mock";
  q.scoring_mode = ScoringMode::vs_gold_reference;
  q.comparison_rule = ComparisonRule::forward_output;
  q.positions = {1, 3};
  q.column_langs = {"en", "en"};
  write_score_matrix(q, dir / "q.jsonl");
  EXPECT_EQ(read_score_matrix(dir / "q.jsonl"), q);
}

TEST(ScoreMatrix, RejectsOutOfRangeValues) {
  RawScoreMatrix q;
  q.sentence_ids = {"a"};
  q.values = ScoreGrid::from_rows({{1.5}});
  EXPECT_THROW(q.validate(), InvalidArgument);
}

TEST(ManifestFile, RoundTrips) {
  testing::ScratchDir dir("manifest");
  RunManifest m;
  m.plan_ids = {"p1", "p2"};
  m.backend_ids = {"gemma"};
  m.seed = 42;
  m.started_at = "2025-01-01T00:00:00Z";
  m.finished_at = "2025-01-01T00:01:00Z";
  m.status = "partial";
  m.completed_chains = 29;
  m.failed_chains = 1;
  m.failures = {{"s3", "p1", "HTTP 500"}};
  write_manifest(m, dir / "m.json");
  EXPECT_EQ(read_manifest(dir / "m.json"), m);
}

}  // namespace
}  // namespace telephone
