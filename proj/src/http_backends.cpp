#include "telephone/http_backends.hpp"

#include <fmt/format.h>
#include <httplib.h>

#include <semaphore>
#include <thread>

#include "json_io.hpp"
#include "telephone/error.hpp"
#include "telephone/log.hpp"

namespace telephone {

using detail::Json;

namespace {

// Shared by both adapters: bounded concurrency, retries, status handling.
class JsonPoster {
 public:
  JsonPoster(std::string backend_id, HttpEndpoint endpoint)
      : id_(std::move(backend_id)),
        endpoint_(std::move(endpoint)),
        slots_(static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, endpoint_.max_in_flight))) {
    if (endpoint_.base_url.empty()) throw InvalidArgument(fmt::format("backend {} has no URL", id_));
    if (endpoint_.retry.max_attempts < 1) throw InvalidArgument("retry.max_attempts must be >= 1");
  }

  Json post(const std::string& path, const Json& body) {
    slots_.acquire();
    struct Release {
      std::counting_semaphore<>& s;
      ~Release() { s.release(); }
    } release{slots_};

    const std::string payload = detail::dump(body);
    auto delay = endpoint_.retry.initial_backoff;
    std::string last_error;
    for (int attempt = 1; attempt <= endpoint_.retry.max_attempts; ++attempt) {
      if (attempt > 1) {
        std::this_thread::sleep_for(delay);
        delay = std::chrono::milliseconds(
            static_cast<long long>(static_cast<double>(delay.count()) * endpoint_.retry.multiplier));
      }
      // httplib::Client is not shared between threads; one per request.
      httplib::Client client(endpoint_.base_url);
      client.set_connection_timeout(endpoint_.timeout);
      client.set_read_timeout(endpoint_.timeout);
      client.set_write_timeout(endpoint_.timeout);
      httplib::Headers headers;
      if (!endpoint_.api_key.empty()) headers.emplace("Authorization", "Bearer " + endpoint_.api_key);

      auto res = client.Post(path, headers, payload, "application/json");
      if (!res) {
        last_error = fmt::format("{} {}{}: {}", id_, endpoint_.base_url, path, httplib::to_string(res.error()));
        log::warn("{} (attempt {}/{})", last_error, attempt, endpoint_.retry.max_attempts);
        continue;
      }
      const int status = res->status;
      if (status >= 200 && status < 300) {
        try {
          return Json::parse(res->body);
        } catch (const nlohmann::json::exception&) {
          throw BackendError(fmt::format("{}: response is not JSON", id_));
        }
      }
      last_error = fmt::format("{} {}{}: HTTP {}", id_, endpoint_.base_url, path, status);
      if (status == 401 || status == 403 || status == 404) throw SystemicBackendError(last_error);
      if (status == 429 || status >= 500) {
        log::warn("{} (attempt {}/{})", last_error, attempt, endpoint_.retry.max_attempts);
        continue;
      }
      throw BackendError(fmt::format("{}: {}", last_error, res->body));
    }
    throw BackendError(fmt::format("{} (gave up after {} attempts)", last_error, endpoint_.retry.max_attempts),
                       true);
  }

 private:
  std::string id_;
  HttpEndpoint endpoint_;
  std::counting_semaphore<> slots_;
};

}  // namespace

struct HttpTranslator::Impl {
  Impl(const std::string& id, HttpEndpoint endpoint) : poster(id, std::move(endpoint)) {}
  JsonPoster poster;
};

HttpTranslator::HttpTranslator(std::string id, HttpEndpoint endpoint)
    : id_(std::move(id)), impl_(std::make_unique<Impl>(id_, std::move(endpoint))) {}

HttpTranslator::~HttpTranslator() = default;

std::string HttpTranslator::translate(const TranslationRequest& request) {
  request.validate();
  Json body;
  body["text"] = request.text;
  body["source_lang"] = request.from_lang;
  body["target_lang"] = request.to_lang;
  const auto reply = impl_->poster.post("/translate", body);
  auto it = reply.find("translation");
  if (it == reply.end() || !it->is_string()) {
    throw BackendError(fmt::format("{}: response lacks a string 'translation'", id_));
  }
  auto text = it->get<std::string>();
  if (text.empty()) throw BackendError(fmt::format("{}: empty translation", id_));
  return text;
}

struct HttpScorer::Impl {
  Impl(const std::string& id, HttpEndpoint endpoint) : poster(id, std::move(endpoint)) {}
  JsonPoster poster;
};

HttpScorer::HttpScorer(std::string id, HttpEndpoint endpoint)
    : id_(std::move(id)), impl_(std::make_unique<Impl>(id_, std::move(endpoint))) {}

HttpScorer::~HttpScorer() = default;

QualityScore HttpScorer::score(const ScoreRequest& request) {
  request.validate();
  Json body;
  body["source"] = request.source;
  body["hypothesis"] = request.hypothesis;
  body["reference"] = request.reference ? Json(*request.reference) : Json(nullptr);
  const auto reply = impl_->poster.post("/score", body);
  auto it = reply.find("score");
  if (it == reply.end() || !it->is_number()) {
    throw BackendError(fmt::format("{}: response lacks a numeric 'score'", id_));
  }
  const double v = it->get<double>();
  if (!(v >= 0.0 && v <= 1.0)) {
    throw BackendError(fmt::format("{}: protocol error, score {} outside [0, 1]", id_, v));
  }
  return QualityScore(v);
}

}  // namespace telephone
