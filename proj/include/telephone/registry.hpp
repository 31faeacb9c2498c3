#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "telephone/backends.hpp"

namespace telephone {

using TranslatorResolver = std::function<Translator&(const std::string& translator_id)>;

/// Corruption used when simulators stand in for real MT: token drop and
/// replacement at 0.1 each.
CorruptionConfig default_mock_corruption(std::uint64_t seed);

/// Backend ids -> instances. Translators are wrapped in a CachingTranslator
/// when a cache is supplied.
class BackendRegistry {
 public:
  BackendRegistry() = default;

  /// Config file format:
  ///   {"translators": {"<id>": {"type": "http", "url": "...", "url_env": "VAR",
  ///                             "api_key_env": "VAR", "max_in_flight": 8,
  ///                             "retries": 3, "backoff_ms": 200, "timeout_s": 60}
  ///                  | {"type": "simulator", "drop_p", "swap_p", "replace_p", "seed"}},
  ///    "scorer": {"id": "...", "type": "http" | "mock", ...}}
  static BackendRegistry from_config(std::string_view json_text, std::uint64_t seed,
                                     std::shared_ptr<TranslationCache> cache = nullptr);

  /// Simulators for every id (seed mixed with the id) and the mock scorer.
  static BackendRegistry mock(std::span<const std::string> translator_ids, std::uint64_t seed,
                              std::shared_ptr<TranslationCache> cache = nullptr);

  void add_translator(std::shared_ptr<Translator> translator);
  void set_scorer(std::shared_ptr<Scorer> scorer);

  /// Throws InvalidArgument listing the configured ids when unknown.
  Translator& translator(const std::string& id) const;
  /// Throws InvalidArgument when no scorer is configured.
  Scorer& scorer() const;

  std::vector<std::string> translator_ids() const;
  TranslatorResolver resolver() const;

 private:
  std::map<std::string, std::shared_ptr<Translator>> translators_;
  std::shared_ptr<Scorer> scorer_;
  std::shared_ptr<TranslationCache> cache_;
};

}  // namespace telephone
