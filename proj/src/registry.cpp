#include "telephone/registry.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <cstdlib>

#include "json_io.hpp"
#include "telephone/error.hpp"
#include "telephone/hash.hpp"
#include "telephone/http_backends.hpp"

namespace telephone {

using detail::Json;

CorruptionConfig default_mock_corruption(std::uint64_t seed) {
  CorruptionConfig c;
  c.token_drop_p = 0.1;
  c.token_replace_p = 0.1;
  c.seed = seed;
  return c;
}

namespace {

std::uint64_t translator_seed(std::uint64_t seed, const std::string& id) { return seed ^ fnv1a64(id); }

std::string env_or_empty(const std::string& name) {
  if (name.empty()) return {};
  const char* v = std::getenv(name.c_str());
  return v ? v : "";
}

HttpEndpoint endpoint_from(const std::string& id, const Json& j) {
  HttpEndpoint e;
  e.base_url = detail::get_string_or(j, "url", "");
  if (e.base_url.empty()) e.base_url = env_or_empty(detail::get_string_or(j, "url_env", ""));
  if (e.base_url.empty()) {
    throw InvalidArgument(fmt::format("backend {}: no 'url' and 'url_env' is unset", id));
  }
  e.api_key = env_or_empty(detail::get_string_or(j, "api_key_env", ""));
  if (j.contains("max_in_flight")) e.max_in_flight = detail::get_size(j, "max_in_flight");
  if (j.contains("retries")) e.retry.max_attempts = static_cast<int>(detail::get_size(j, "retries"));
  if (j.contains("backoff_ms")) e.retry.initial_backoff = std::chrono::milliseconds(detail::get_size(j, "backoff_ms"));
  if (j.contains("timeout_s")) e.timeout = std::chrono::seconds(detail::get_size(j, "timeout_s"));
  return e;
}

}  // namespace

BackendRegistry BackendRegistry::from_config(std::string_view json_text, std::uint64_t seed,
                                             std::shared_ptr<TranslationCache> cache) {
  const auto root = detail::parse_json(json_text, "backend config");
  BackendRegistry reg;
  reg.cache_ = std::move(cache);
  if (auto ts = root.find("translators"); ts != root.end()) {
    if (!ts->is_object()) throw FormatError("backend config: 'translators' must be an object");
    for (const auto& [id, spec] : ts->items()) {
      const auto type = detail::get_string(spec, "type");
      if (type == "http") {
        reg.add_translator(std::make_shared<HttpTranslator>(id, endpoint_from(id, spec)));
      } else if (type == "simulator") {
        CorruptionConfig c = default_mock_corruption(translator_seed(seed, id));
        if (spec.contains("drop_p")) c.token_drop_p = detail::get_number(spec, "drop_p");
        if (spec.contains("swap_p")) c.token_swap_p = detail::get_number(spec, "swap_p");
        if (spec.contains("replace_p")) c.token_replace_p = detail::get_number(spec, "replace_p");
        if (spec.contains("seed")) c.seed = spec.at("seed").get<std::uint64_t>();
        reg.add_translator(std::make_shared<SimulatorTranslator>(id, std::move(c)));
      } else {
        throw FormatError(fmt::format("backend config: translator {} has unknown type '{}'", id, type));
      }
    }
  }
  if (auto s = root.find("scorer"); s != root.end()) {
    const auto id = detail::get_string_or(*s, "id", "scorer");
    const auto type = detail::get_string(*s, "type");
    if (type == "http") {
      reg.set_scorer(std::make_shared<HttpScorer>(id, endpoint_from(id, *s)));
    } else if (type == "mock") {
      reg.set_scorer(std::make_shared<MockScorer>(id));
    } else {
      throw FormatError(fmt::format("backend config: scorer has unknown type '{}'", type));
    }
  }
  return reg;
}

BackendRegistry BackendRegistry::mock(std::span<const std::string> translator_ids, std::uint64_t seed,
                                      std::shared_ptr<TranslationCache> cache) {
  BackendRegistry reg;
  reg.cache_ = std::move(cache);
  for (const auto& id : translator_ids) {
    reg.add_translator(std::make_shared<SimulatorTranslator>(id, default_mock_corruption(translator_seed(seed, id))));
  }
  reg.set_scorer(std::make_shared<MockScorer>());
  return reg;
}

void BackendRegistry::add_translator(std::shared_ptr<Translator> translator) {
  const auto id = translator->id();
  if (cache_) translator = std::make_shared<CachingTranslator>(std::move(translator), cache_);
  translators_.insert_or_assign(id, std::move(translator));
}

void BackendRegistry::set_scorer(std::shared_ptr<Scorer> scorer) { scorer_ = std::move(scorer); }

Translator& BackendRegistry::translator(const std::string& id) const {
  auto it = translators_.find(id);
  if (it == translators_.end()) {
    throw InvalidArgument(fmt::format("unknown translator '{}'; configured: {}", id, fmt::join(translator_ids(), ", ")));
  }
  return *it->second;
}

Scorer& BackendRegistry::scorer() const {
  if (!scorer_) throw InvalidArgument("no scorer configured");
  return *scorer_;
}

std::vector<std::string> BackendRegistry::translator_ids() const {
  std::vector<std::string> ids;
  for (const auto& [id, t] : translators_) ids.push_back(id);
  return ids;
}

TranslatorResolver BackendRegistry::resolver() const {
  return [this](const std::string& id) -> Translator& { return translator(id); };
}

}  // namespace telephone
