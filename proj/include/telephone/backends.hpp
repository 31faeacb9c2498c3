#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace telephone {

/// Identifies one hop of one sentence's chain; seeds the simulator and keys the cache.
struct HopKey {
  std::string sentence_id;
  std::size_t hop_index = 0;

  bool operator==(const HopKey&) const = default;
};

struct TranslationRequest {
  std::string text;
  std::string from_lang;
  std::string to_lang;
  std::optional<HopKey> context;

  void validate() const;
};

struct ScoreRequest {
  std::string source;
  std::string hypothesis;
  std::optional<std::string> reference;

  void validate() const;
};

/// A metric score, always in [0, 1].
class QualityScore {
 public:
  /// Throws BackendError for NaN or out-of-range values.
  explicit QualityScore(double value);
  double value() const noexcept { return value_; }

 private:
  double value_;
};

/// Implementations must tolerate concurrent calls.
class Translator {
 public:
  virtual ~Translator() = default;
  virtual const std::string& id() const = 0;
  /// Never returns an empty string; throws BackendError instead.
  virtual std::string translate(const TranslationRequest& request) = 0;
};

/// Implementations must tolerate concurrent calls.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual const std::string& id() const = 0;
  virtual QualityScore score(const ScoreRequest& request) = 0;
};

struct CorruptionConfig {
  double token_drop_p = 0.0;
  double token_swap_p = 0.0;
  double token_replace_p = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::string> lexicon = default_lexicon();

  void validate() const;
  static std::vector<std::string> default_lexicon();
};

/// Whitespace-tokenizes and, per token, draws drop / replace / swap decisions
/// from a stream seeded by (seed, hop). At least one token survives. Returns the
/// input unchanged when no edit fires.
std::string corrupt_text(const CorruptionConfig& config, std::string_view text, const HopKey& hop);

/// Stand-in MT system: a noisy channel over tokens, language codes ignored.
class SimulatorTranslator final : public Translator {
 public:
  SimulatorTranslator(std::string id, CorruptionConfig config);

  const std::string& id() const override { return id_; }
  std::string translate(const TranslationRequest& request) override;
  const CorruptionConfig& config() const noexcept { return config_; }

 private:
  std::string id_;
  CorruptionConfig config_;
};

/// Bag-of-tokens F1 (clipped counts) between whitespace-tokenized strings.
/// Two empty strings score 1, one empty string scores 0.
double token_f1(std::string_view hypothesis, std::string_view reference);

/// Deterministic lexical-similarity metric: token F1 of the hypothesis against
/// the reference, or against the source when no reference is given.
class MockScorer final : public Scorer {
 public:
  explicit MockScorer(std::string id = "mock") : id_(std::move(id)) {}

  const std::string& id() const override { return id_; }
  QualityScore score(const ScoreRequest& request) override;

 private:
  std::string id_;
};

/// Thread-safe translation cache, optionally persisted as append-only JSONL.
/// Entries are keyed by a content hash of (backend id, languages, text, hop context).
class TranslationCache {
 public:
  TranslationCache() = default;
  /// Loads existing entries from `backing` (if present) and appends new ones to it.
  explicit TranslationCache(std::filesystem::path backing);

  TranslationCache(const TranslationCache&) = delete;
  TranslationCache& operator=(const TranslationCache&) = delete;

  static std::string key(std::string_view backend_id, const TranslationRequest& request);

  std::optional<std::string> lookup(std::string_view backend_id, const TranslationRequest& request);
  void store(std::string_view backend_id, const TranslationRequest& request, const std::string& translation);

  std::size_t hits() const noexcept { return hits_.load(); }
  std::size_t misses() const noexcept { return misses_.load(); }
  std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::unordered_map<std::string, std::string> entries_;
  std::optional<std::filesystem::path> backing_;
  std::ofstream out_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};
};

/// Decorator serving repeated requests from a TranslationCache.
class CachingTranslator final : public Translator {
 public:
  CachingTranslator(std::shared_ptr<Translator> inner, std::shared_ptr<TranslationCache> cache)
      : inner_(std::move(inner)), cache_(std::move(cache)) {}

  const std::string& id() const override { return inner_->id(); }
  std::string translate(const TranslationRequest& request) override;

 private:
  std::shared_ptr<Translator> inner_;
  std::shared_ptr<TranslationCache> cache_;
};

}  // namespace telephone
