// Test-only helpers: synthetic corpora, scratch directories, pipeline drivers.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "telephone/ingest.hpp"
#include "telephone/rotation.hpp"
#include "telephone/scores.hpp"

namespace telephone::testing {

/// Sentences of 8-16 words drawn from a fixed vocabulary; ids are "s<k>".
/// Every record carries a gold reference.
Corpus synthetic_corpus(std::size_t n, std::uint64_t seed, const std::string& src = "cs",
                        const std::string& tgt = "en");

/// Writes the corpus as TSV with a header row.
void write_corpus_tsv(const Corpus& corpus, const std::filesystem::path& path);

/// Fresh empty directory under the system temp dir, removed on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag);
  ~ScratchDir();
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Runs `plan` over the corpus with simulators (drop and replace at `noise`)
/// and scores every comparison point against the original source with the
/// mock scorer.
RawScoreMatrix simulate_scores(const Corpus& corpus, const RotationPlan& plan, ComparisonRule rule, double noise,
                               std::uint64_t seed, std::size_t parallelism = 1);

/// Reads a whole file as bytes.
std::string slurp(const std::filesystem::path& path);

/// Invokes the command-line entry point in process; returns its exit code.
int run_cli(const std::vector<std::string>& args, std::string* out = nullptr, std::string* err = nullptr);

}  // namespace telephone::testing
