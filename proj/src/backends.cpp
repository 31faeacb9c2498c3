#include "telephone/backends.hpp"

#include <fmt/format.h>
#include <openssl/evp.h>

#include <cmath>

#include "json_io.hpp"
#include "telephone/error.hpp"
#include "telephone/hash.hpp"

namespace telephone {

using detail::Json;

void TranslationRequest::validate() const {
  if (text.empty()) throw InvalidArgument("translation request has empty text");
  if (from_lang == to_lang) {
    throw InvalidArgument(fmt::format("translation request from {} into itself", from_lang));
  }
}

void ScoreRequest::validate() const {
  if (source.empty()) throw InvalidArgument("score request has empty source");
  if (hypothesis.empty()) throw InvalidArgument("score request has empty hypothesis");
}

QualityScore::QualityScore(double value) : value_(value) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw BackendError(fmt::format("score {} outside [0, 1]", value));
  }
}

void CorruptionConfig::validate() const {
  for (double p : {token_drop_p, token_swap_p, token_replace_p}) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument(fmt::format("corruption probability {} not in [0, 1]", p));
  }
}

std::vector<std::string> CorruptionConfig::default_lexicon() {
  return {"thing",  "perhaps", "very",   "certain", "which",  "around", "often",  "people",
          "matter", "quite",   "former", "little",  "however", "second", "above",  "whole",
          "common", "rather",  "moment", "several", "within", "likely", "simply", "across"};
}

namespace {

std::vector<std::string_view> tokenize(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) out.push_back(text.substr(start, i - start));
  }
  return out;
}

std::uint64_t hop_seed(std::uint64_t seed, const HopKey& hop) {
  return splitmix64(seed ^ splitmix64(fnv1a64(hop.sentence_id) ^ splitmix64(hop.hop_index)));
}

}  // namespace

std::string corrupt_text(const CorruptionConfig& config, std::string_view text, const HopKey& hop) {
  const auto tokens = tokenize(text);
  if (tokens.empty()) return std::string(text);

  SplitMix64 rng(hop_seed(config.seed, hop));
  bool changed = false;
  std::vector<std::string_view> kept;
  kept.reserve(tokens.size());
  for (auto token : tokens) {
    // Fixed number of draws per token keeps the stream aligned whatever fires.
    const double u_drop = rng.uniform();
    const double u_replace = rng.uniform();
    const std::uint64_t pick = rng.next();
    if (u_drop < config.token_drop_p) {
      changed = true;
      continue;
    }
    if (u_replace < config.token_replace_p && !config.lexicon.empty()) {
      token = config.lexicon[pick % config.lexicon.size()];
      changed = true;
    }
    kept.push_back(token);
  }
  for (std::size_t i = 0; i + 1 < kept.size(); ++i) {
    if (rng.uniform() < config.token_swap_p) {
      std::swap(kept[i], kept[i + 1]);
      changed = true;
      ++i;
    }
  }
  if (kept.empty()) kept.push_back(tokens[rng.below(tokens.size())]);
  if (!changed) return std::string(text);

  std::string out;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    if (i) out += ' ';
    out += kept[i];
  }
  return out;
}

SimulatorTranslator::SimulatorTranslator(std::string id, CorruptionConfig config)
    : id_(std::move(id)), config_(std::move(config)) {
  config_.validate();
}

std::string SimulatorTranslator::translate(const TranslationRequest& request) {
  request.validate();
  const HopKey hop = request.context.value_or(HopKey{fmt::format("{:016x}", fnv1a64(request.text)), 0});
  auto out = corrupt_text(config_, request.text, hop);
  if (out.empty()) throw BackendError(fmt::format("{}: empty translation", id_));
  return out;
}

double token_f1(std::string_view hypothesis, std::string_view reference) {
  const auto hyp = tokenize(hypothesis);
  const auto ref = tokenize(reference);
  if (hyp.empty() && ref.empty()) return 1.0;
  if (hyp.empty() || ref.empty()) return 0.0;
  std::unordered_map<std::string_view, std::size_t> counts;
  for (auto t : ref) ++counts[t];
  std::size_t overlap = 0;
  for (auto t : hyp) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++overlap;
    }
  }
  // F1 = 2PR / (P + R) = 2 * overlap / (|hyp| + |ref|)
  return 2.0 * static_cast<double>(overlap) / static_cast<double>(hyp.size() + ref.size());
}

QualityScore MockScorer::score(const ScoreRequest& request) {
  request.validate();
  return QualityScore(token_f1(request.hypothesis, request.reference.value_or(request.source)));
}

TranslationCache::TranslationCache(std::filesystem::path backing) : backing_(std::move(backing)) {
  if (std::filesystem::exists(*backing_)) {
    const auto lines = detail::read_lines(*backing_);
    for (std::size_t k = 0; k < lines.size(); ++k) {
      const auto& l = lines[k];
      if (l.text.empty()) continue;
      try {
        const auto j = Json::parse(l.text);
        entries_.insert_or_assign(detail::get_string(j, "key"), detail::get_string(j, "translation"));
      } catch (const std::exception& e) {
        // A writer killed mid-line leaves one unterminated record at the end.
        if (k + 1 == lines.size() && !l.terminated) break;
        throw FormatError(fmt::format("{}:{}: bad cache entry ({})", backing_->string(), l.line_number, e.what()));
      }
    }
  } else if (backing_->has_parent_path()) {
    std::filesystem::create_directories(backing_->parent_path());
  }
  out_.open(*backing_, std::ios::binary | std::ios::app);
  if (!out_) throw Error(fmt::format("cannot open cache file '{}'", backing_->string()));
}

std::string TranslationCache::key(std::string_view backend_id, const TranslationRequest& request) {
  std::string material;
  material.append(backend_id).push_back('\x1f');
  material.append(request.from_lang).push_back('\x1f');
  material.append(request.to_lang).push_back('\x1f');
  if (request.context) {
    material.append(request.context->sentence_id).push_back('\x1f');
    material.append(std::to_string(request.context->hop_index));
  }
  material.push_back('\x1e');
  material.append(request.text);

  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(material.data(), material.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

std::optional<std::string> TranslationCache::lookup(std::string_view backend_id, const TranslationRequest& request) {
  const auto k = key(backend_id, request);
  std::lock_guard lock(mutex_);
  auto it = entries_.find(k);
  if (it == entries_.end()) {
    ++misses_;
    return std::nullopt;
  }
  ++hits_;
  return it->second;
}

void TranslationCache::store(std::string_view backend_id, const TranslationRequest& request,
                             const std::string& translation) {
  const auto k = key(backend_id, request);
  std::lock_guard lock(mutex_);
  if (!entries_.insert_or_assign(k, translation).second) return;
  if (out_.is_open()) {
    Json j;
    j["key"] = k;
    j["backend"] = backend_id;
    j["from"] = request.from_lang;
    j["to"] = request.to_lang;
    j["translation"] = translation;
    out_ << detail::dump(j) << '\n';
    out_.flush();
  }
}

std::size_t TranslationCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

std::string CachingTranslator::translate(const TranslationRequest& request) {
  if (auto hit = cache_->lookup(inner_->id(), request)) return *hit;
  auto out = inner_->translate(request);
  if (out.empty()) throw BackendError(fmt::format("{}: empty translation", inner_->id()));
  cache_->store(inner_->id(), request, out);
  return out;
}

}  // namespace telephone
