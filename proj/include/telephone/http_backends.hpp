#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <string>

#include "telephone/backends.hpp"

namespace telephone {

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{200};
  double multiplier = 2.0;
};

/// Where and how to reach an HTTP backend.
struct HttpEndpoint {
  std::string base_url;  // scheme://host[:port]
  std::string api_key;   // sent as "Authorization: Bearer <key>" when set
  std::chrono::seconds timeout{60};
  std::size_t max_in_flight = 8;
  RetryPolicy retry;
};

/// POST /translate {"text","source_lang","target_lang"} -> {"translation"}.
/// Connection failures, 429 and 5xx are retried with exponential backoff;
/// 401/403/404 raise SystemicBackendError; other non-2xx raise BackendError.
class HttpTranslator final : public Translator {
 public:
  HttpTranslator(std::string id, HttpEndpoint endpoint);
  ~HttpTranslator() override;

  const std::string& id() const override { return id_; }
  std::string translate(const TranslationRequest& request) override;

 private:
  struct Impl;
  std::string id_;
  std::unique_ptr<Impl> impl_;
};

/// POST /score {"source","hypothesis","reference"} -> {"score"}; scores outside
/// [0, 1] are protocol errors, never clamped.
class HttpScorer final : public Scorer {
 public:
  HttpScorer(std::string id, HttpEndpoint endpoint);
  ~HttpScorer() override;

  const std::string& id() const override { return id_; }
  QualityScore score(const ScoreRequest& request) override;

 private:
  struct Impl;
  std::string id_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace telephone
