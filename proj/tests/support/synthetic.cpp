#include "synthetic.hpp"

#include <fmt/format.h>

#include <atomic>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>

#include <unistd.h>

#include "telephone/backends.hpp"
#include "telephone/chain_runner.hpp"
#include "telephone/cli.hpp"
#include "telephone/hash.hpp"

namespace telephone::testing {

namespace fs = std::filesystem;

Corpus synthetic_corpus(std::size_t n, std::uint64_t seed, const std::string& src, const std::string& tgt) {
  static const std::vector<std::string> vocab = {
      "river", "stone",  "quiet", "market", "winter", "letter", "garden", "engine", "window", "silver",
      "bridge", "morning", "paper", "forest", "signal", "harbor", "candle", "orange", "ladder", "pocket",
      "mirror", "valley", "thread", "button", "castle", "meadow", "basket", "rocket", "feather", "lantern",
      "the",   "a",      "of",    "and",    "under",  "near",   "with",   "from",   "into",   "over"};
  SplitMix64 rng(seed);
  std::vector<SentenceRecord> records;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t len = 8 + rng.below(9);
    std::string text;
    for (std::size_t w = 0; w < len; ++w) {
      if (w) text += ' ';
      text += vocab[rng.below(vocab.size())];
    }
    SentenceRecord r;
    r.id = fmt::format("s{}", i);
    r.source_text = text;
    r.source_lang = src;
    r.target_lang = tgt;
    r.reference_text = "ref " + text;
    records.push_back(std::move(r));
  }
  return Corpus("synthetic", std::move(records));
}

void write_corpus_tsv(const Corpus& corpus, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  out << "id\tsource_text\tsource_lang\ttarget_lang\treference_text\n";
  for (const auto& r : corpus.records()) {
    out << r.id << '\t' << r.source_text << '\t' << r.source_lang << '\t' << r.target_lang << '\t'
        << r.reference_text.value_or("") << '\n';
  }
}

ScratchDir::ScratchDir(const std::string& tag) {
  static std::atomic<unsigned> counter{0};
  path_ = fs::temp_directory_path() /
          fmt::format("telephone-{}-{}-{}", tag, static_cast<unsigned>(::getpid()), counter.fetch_add(1));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

ScratchDir::~ScratchDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

RawScoreMatrix simulate_scores(const Corpus& corpus, const RotationPlan& plan, ComparisonRule rule, double noise,
                               std::uint64_t seed, std::size_t parallelism) {
  std::map<std::string, std::unique_ptr<SimulatorTranslator>> sims;
  for (const auto& h : plan.hops) {
    if (sims.count(h.translator_id)) continue;
    CorruptionConfig c;
    c.token_drop_p = noise;
    c.token_replace_p = noise;
    c.seed = seed ^ fnv1a64(h.translator_id);
    sims[h.translator_id] = std::make_unique<SimulatorTranslator>(h.translator_id, c);
  }
  const TranslatorResolver resolve = [&](const std::string& id) -> Translator& { return *sims.at(id); };
  const RotationPlan plans[] = {plan};
  RunOptions run;
  run.parallelism = parallelism;
  run.seed = seed;
  const auto result = run_corpus(corpus, plans, resolve, run);
  MockScorer scorer;
  ScoreOptions options;
  options.rule = rule;
  options.parallelism = parallelism;
  options.corpus = &corpus;
  return score_chains(result.chains, plan, scorer, options);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_cli(const std::vector<std::string>& args, std::string* out, std::string* err) {
  std::vector<const char*> argv = {"telephone"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream o, e;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), o, e);
  if (out) *out = o.str();
  if (err) *err = e.str();
  return code;
}

}  // namespace telephone::testing
