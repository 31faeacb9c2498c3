#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "telephone/chain.hpp"
#include "telephone/scores.hpp"

namespace telephone {

/// One source sentence with its language pair and optional gold reference.
struct SentenceRecord {
  std::string id;
  std::string source_text;
  std::string source_lang;
  std::string target_lang;
  std::optional<std::string> reference_text;
  std::string origin;

  /// "cs-en" style language-pair tag.
  std::string language_pair() const { return source_lang + "-" + target_lang; }

  bool operator==(const SentenceRecord&) const = default;
};

/// Ordered, id-unique collection of sentences.
class Corpus {
 public:
  Corpus() = default;
  /// Throws InvalidArgument on empty/duplicate ids, empty source text or
  /// source_lang == target_lang.
  Corpus(std::string name, std::vector<SentenceRecord> records);

  const std::string& name() const noexcept { return name_; }
  const std::vector<SentenceRecord>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  const SentenceRecord& operator[](std::size_t i) const { return records_[i]; }

  /// nullptr when absent.
  const SentenceRecord* find(const std::string& id) const;

 private:
  std::string name_;
  std::vector<SentenceRecord> records_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
};

enum class CorpusFormat { tsv, jsonl };

/// Guesses from the extension (.tsv/.txt -> tsv, .jsonl/.json -> jsonl).
CorpusFormat corpus_format_for(const std::filesystem::path& path);

/// Loads a corpus. TSV needs a header row naming at least source_text,
/// source_lang and target_lang; JSONL rows may use the long field names or the
/// common src/ref/lp short forms. Rows without an id get their 0-based row index.
Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format);
Corpus load_corpus(const std::filesystem::path& path);

/// round-half-up(fraction * n)
std::size_t train_size(std::size_t n, double train_fraction);

/// Deterministic shuffle by seed, then prefix split into (train, validation).
std::pair<Corpus, Corpus> split_corpus(const Corpus& corpus, const SplitSpec& spec);

// Chains: one JSON object per line, keys in fixed order.
std::string chain_to_jsonl(const TranslationChain& chain);
void write_chains(std::span<const TranslationChain> chains, const std::filesystem::path& path);

enum class TailPolicy { strict, drop_truncated_tail };

/// Throws FormatError naming the 0-based record index of the first bad line.
/// drop_truncated_tail ignores a final line with no newline terminator that
/// fails to parse (the signature of a writer killed mid-record).
std::vector<TranslationChain> read_chains(const std::filesystem::path& path,
                                          TailPolicy tail = TailPolicy::strict);

// Score matrices: header record followed by one row record per sentence.
void write_score_matrix(const RawScoreMatrix& matrix, const std::filesystem::path& path);
RawScoreMatrix read_score_matrix(const std::filesystem::path& path);

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path);
RunManifest read_manifest(const std::filesystem::path& path);

}  // namespace telephone
